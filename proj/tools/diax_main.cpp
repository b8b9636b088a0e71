#include "diax/cli.hpp"

int main(int argc, char** argv) {
    return diax::run_cli(argc, argv);
}
