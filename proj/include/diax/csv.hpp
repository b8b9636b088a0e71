#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace diax {

/// One tabular source: first CSV row is the header, every data row has
/// header arity.
struct SourceTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view column_name) const;
};

/// RFC-4180 parser: quoted fields, doubled-quote escapes, CR/LF line ends.
/// Blank lines are skipped. Throws CsvError on stray quotes or arity
/// mismatches.
SourceTable parse_csv(std::string_view text, std::string name);

/// Loads a table named after the file stem.
SourceTable load_csv_file(const std::filesystem::path& path);

/// Quotes a cell for CSV output when it contains a delimiter, quote, or
/// newline; returns it untouched otherwise.
std::string csv_quote(std::string_view cell);

/// Shortest decimal rendering that parses back to the same double;
/// locale-independent, so output files diff cleanly across platforms.
std::string format_number(double v);

} // namespace diax
