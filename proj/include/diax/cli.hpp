#pragma once

namespace diax {

/// Entry point behind the `diax` binary. Exit codes: 0 success, 1 data or
/// validation errors, 2 usage errors. Diagnostics go to stderr; data goes
/// to files or stdout.
int run_cli(int argc, const char* const* argv);

} // namespace diax
