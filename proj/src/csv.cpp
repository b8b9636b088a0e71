#include "diax/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "diax/error.hpp"

namespace diax {

std::optional<std::size_t> SourceTable::column(std::string_view column_name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == column_name) {
            return i;
        }
    }
    return std::nullopt;
}

SourceTable parse_csv(std::string_view text, std::string name) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_had_quote = false;
    bool any_field = false; // the current record has content or separators

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        record_had_quote = record_had_quote || field_was_quoted;
        field_was_quoted = false;
    };
    auto end_record = [&](std::size_t line_hint) {
        end_field();
        const bool blank = record.size() == 1 && record[0].empty() && !record_had_quote;
        if (!blank) {
            if (!records.empty() && record.size() != records[0].size()) {
                throw CsvError(name + ": record " + std::to_string(records.size() + 1) + " has " +
                               std::to_string(record.size()) + " fields, expected " +
                               std::to_string(records[0].size()));
            }
            records.push_back(std::move(record));
        }
        record.clear();
        record_had_quote = false;
        any_field = false;
        (void)line_hint;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty() || field_was_quoted) {
                throw CsvError(name + ": stray quote inside unquoted field");
            }
            in_quotes = true;
            field_was_quoted = true;
            any_field = true;
            break;
        case ',':
            end_field();
            any_field = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            end_record(i);
            break;
        case '\n':
            end_record(i);
            break;
        default:
            if (field_was_quoted) {
                throw CsvError(name + ": content after closing quote");
            }
            field += c;
            any_field = true;
            break;
        }
    }
    if (in_quotes) {
        throw CsvError(name + ": unterminated quoted field");
    }
    if (any_field || !field.empty()) {
        end_record(text.size());
    }

    if (records.empty()) {
        throw CsvError(name + ": missing header row");
    }
    SourceTable table;
    table.name = std::move(name);
    table.header = std::move(records.front());
    table.rows.assign(std::make_move_iterator(records.begin() + 1),
                      std::make_move_iterator(records.end()));
    return table;
}

SourceTable load_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.stem().string());
}

std::string format_number(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string csv_quote(std::string_view cell) {
    if (cell.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(cell);
    }
    std::string out;
    out.reserve(cell.size() + 2);
    out += '"';
    for (char c : cell) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

} // namespace diax
