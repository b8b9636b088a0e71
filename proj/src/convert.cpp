#include "diax/convert.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "diax/error.hpp"
#include "diax/timeparse.hpp"

namespace diax {

using nlohmann::json;

bool MappingRule::categorical() const {
    if (auto it = key_registry().find(target); it != key_registry().end()) {
        return it->second.kind == ValueKind::Categorical;
    }
    return metadata.precision && *metadata.precision == "categorical";
}

namespace {

std::string json_string(const json& j, const std::string& path) {
    if (!j.is_string()) {
        throw SpecError(path, "must be a string");
    }
    return j.get<std::string>();
}

double json_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw SpecError(path, "must be a number");
    }
    return j.get<double>();
}

SignalMetadata parse_rule_metadata(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw SpecError(path, "must be an object");
    }
    SignalMetadata m;
    for (const auto& item : j.items()) {
        const std::string& field = item.key();
        const std::string value = json_string(item.value(), path + "." + field);
        if (field == "unit") {
            m.unit = value;
        } else if (field == "description") {
            m.description = value;
        } else if (field == "device") {
            m.device = value;
        } else if (field == "precision") {
            m.precision = value;
        } else if (field == "insulin") {
            m.insulin = value;
        } else if (field == "medication") {
            m.medication = value;
        } else {
            throw SpecError(path + "." + field, "unknown metadata field");
        }
    }
    if (m.unit.empty()) {
        throw SpecError(path + ".unit", "missing or empty");
    }
    if (m.description.empty()) {
        throw SpecError(path + ".description", "missing or empty");
    }
    return m;
}

MappingRule parse_rule(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw SpecError(path, "must be an object");
    }
    MappingRule rule;
    bool has_scale = false;
    bool has_offset = false;
    bool has_metadata = false;
    for (const auto& item : j.items()) {
        const std::string& field = item.key();
        const json& v = item.value();
        const std::string fpath = path + "." + field;
        if (field == "target") {
            rule.target = json_string(v, fpath);
        } else if (field == "source_table") {
            rule.source_table = json_string(v, fpath);
        } else if (field == "time_column") {
            rule.time_column = json_string(v, fpath);
        } else if (field == "time_format") {
            rule.time_format = json_string(v, fpath);
        } else if (field == "value_column") {
            rule.value_column = json_string(v, fpath);
        } else if (field == "unit_in") {
            rule.unit_in = json_string(v, fpath);
        } else if (field == "scale") {
            rule.scale = json_number(v, fpath);
            has_scale = true;
        } else if (field == "offset") {
            rule.offset = json_number(v, fpath);
            has_offset = true;
        } else if (field == "category_map") {
            if (!v.is_object()) {
                throw SpecError(fpath, "must be an object");
            }
            for (const auto& pair : v.items()) {
                const std::string mapped = json_string(pair.value(), fpath + "." + pair.key());
                if (!is_carb_category(mapped)) {
                    throw SpecError(fpath + "." + pair.key(),
                                    "'" + mapped + "' is not a carb category");
                }
                rule.category_map.emplace(pair.key(), mapped);
            }
        } else if (field == "metadata") {
            rule.metadata = parse_rule_metadata(v, fpath);
            has_metadata = true;
        } else {
            throw SpecError(fpath, "unknown field");
        }
    }

    if (!is_valid_signal_key(rule.target)) {
        throw SpecError(path + ".target", "must be a valid signal key (lowercase [a-z0-9_])");
    }
    if (rule.source_table.empty()) {
        throw SpecError(path + ".source_table", "missing or empty");
    }
    if (rule.time_column.empty()) {
        throw SpecError(path + ".time_column", "missing or empty");
    }
    if (rule.value_column.empty()) {
        throw SpecError(path + ".value_column", "missing or empty");
    }
    if (rule.unit_in.empty()) {
        throw SpecError(path + ".unit_in", "missing or empty");
    }
    if (!has_metadata) {
        throw SpecError(path + ".metadata", "missing");
    }

    if (rule.categorical()) {
        if (has_scale || has_offset) {
            throw SpecError(path + ".scale", "scale/offset do not apply to categorical targets");
        }
        if (rule.category_map.empty()) {
            throw SpecError(path + ".category_map", "required for categorical targets");
        }
    } else {
        if (rule.scale == 0.0) {
            throw SpecError(path + ".scale", "must be nonzero");
        }
        if (!rule.category_map.empty()) {
            throw SpecError(path + ".category_map", "only applies to categorical targets");
        }
    }

    // converted values must land in the canonical unit for registry keys
    if (auto reg = key_registry().find(rule.target); reg != key_registry().end()) {
        if (!reg->second.unit.empty() && rule.metadata.unit != reg->second.unit) {
            throw SpecError(path + ".metadata.unit",
                            "must be '" + reg->second.unit + "' for target " + rule.target);
        }
    }
    return rule;
}

bool is_name_component(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
               c == '-';
    });
}

} // namespace

MappingSpec load_mapping_spec(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw SpecError("", std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw SpecError("", "top-level value must be an object");
    }

    MappingSpec spec;
    for (const auto& item : doc.items()) {
        const std::string& field = item.key();
        const json& v = item.value();
        if (field == "trial_name") {
            spec.trial_name = json_string(v, field);
        } else if (field == "subject_id_column") {
            spec.subject_id_column = json_string(v, field);
        } else if (field == "rules") {
            if (!v.is_array() || v.empty()) {
                throw SpecError("rules", "must be a non-empty array");
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                spec.rules.push_back(parse_rule(v[i], "rules[" + std::to_string(i) + "]"));
            }
        } else {
            throw SpecError(field, "unknown field");
        }
    }

    if (!is_name_component(spec.trial_name)) {
        throw SpecError("trial_name",
                        "must be non-empty letters/digits/hyphens (used in filenames)");
    }
    if (spec.subject_id_column.empty()) {
        throw SpecError("subject_id_column", "missing or empty");
    }
    if (spec.rules.empty()) {
        throw SpecError("rules", "must be a non-empty array");
    }
    for (std::size_t i = 0; i < spec.rules.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.rules.size(); ++j) {
            if (spec.rules[i].target == spec.rules[j].target) {
                throw SpecError("rules[" + std::to_string(j) + "].target",
                                "duplicate target '" + spec.rules[j].target + "'");
            }
        }
    }
    return spec;
}

MappingSpec load_mapping_spec_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_mapping_spec(buf.str());
}

namespace {

std::string_view trimmed(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

// C-locale decimal only; trial exports use '.' separators.
double parse_decimal_cell(std::string_view cell) {
    const std::string_view t = trimmed(cell);
    double v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw Error("'" + std::string(cell) + "' is not a plain decimal number");
    }
    return v;
}

struct SignalBuilder {
    Signal signal;
};

} // namespace

ConversionResult convert_tables(const std::vector<SourceTable>& tables, const MappingSpec& spec,
                                const ConversionOptions& options) {
    std::map<std::string, const SourceTable*> by_name;
    for (const auto& t : tables) {
        if (!by_name.emplace(t.name, &t).second) {
            throw CsvError("duplicate source table '" + t.name + "'");
        }
    }

    ConversionResult result;
    bool cgm_mapped = false;
    for (const auto& rule : spec.rules) {
        cgm_mapped = cgm_mapped || rule.target == "cgm";
    }
    if (!cgm_mapped) {
        result.warnings.emplace_back(
            "no rule targets cgm; converted records will fail validation");
    }

    // subject id -> key -> samples under construction
    std::map<std::string, std::map<std::string, SignalBuilder>> subjects;

    for (const auto& rule : spec.rules) {
        auto table_it = by_name.find(rule.source_table);
        if (table_it == by_name.end()) {
            throw ColumnMissing("table '" + rule.source_table + "' was not supplied (rule for " +
                                rule.target + ")");
        }
        const SourceTable& table = *table_it->second;
        const auto id_col = table.column(spec.subject_id_column);
        const auto time_col = table.column(rule.time_column);
        const auto value_col = table.column(rule.value_column);
        if (!id_col) {
            throw ColumnMissing("table '" + table.name + "' lacks subject id column '" +
                                spec.subject_id_column + "'");
        }
        if (!time_col) {
            throw ColumnMissing("table '" + table.name + "' lacks time column '" +
                                rule.time_column + "'");
        }
        if (!value_col) {
            throw ColumnMissing("table '" + table.name + "' lacks value column '" +
                                rule.value_column + "'");
        }

        for (std::size_t row = 0; row < table.rows.size(); ++row) {
            const auto& cells = table.rows[row];
            try {
                const std::string id(trimmed(cells[*id_col]));
                if (!is_name_component(id)) {
                    throw Error("subject id '" + id + "' is not letters/digits/hyphens");
                }
                const std::string_view time_cell = trimmed(cells[*time_col]);
                const TimedInstant when =
                    rule.time_format
                        ? parse_timestamp_format(time_cell, *rule.time_format,
                                                 options.fallback_offset_minutes)
                        : parse_timestamp(time_cell, options.fallback_offset_minutes);

                SignalBuilder& builder = subjects[id][rule.target];
                if (rule.categorical()) {
                    const std::string raw(trimmed(cells[*value_col]));
                    auto mapped = rule.category_map.find(raw);
                    if (mapped == rule.category_map.end()) {
                        throw Error("category '" + raw + "' has no mapping");
                    }
                    builder.signal.kind = ValueKind::Categorical;
                    builder.signal.times.push_back(when);
                    builder.signal.labels.push_back(mapped->second);
                } else {
                    const double raw = parse_decimal_cell(cells[*value_col]);
                    builder.signal.kind = ValueKind::Numeric;
                    builder.signal.times.push_back(when);
                    builder.signal.numbers.push_back(raw * rule.scale + rule.offset);
                }
            } catch (const Error& e) {
                if (options.skip_bad_rows) {
                    ++result.skipped_rows;
                    result.warnings.push_back("skipped " + table.name + " row " +
                                              std::to_string(row + 1) + " (" + rule.target +
                                              "): " + e.what());
                } else {
                    throw RowError(row + 1, table.name + " (" + rule.target + "): " + e.what());
                }
            }
        }
    }

    for (auto& [id, streams] : subjects) {
        SubjectRecord record;
        record.unique_id = spec.trial_name + "-" + id;
        for (const auto& rule : spec.rules) {
            auto stream = streams.find(rule.target);
            if (stream == streams.end()) {
                continue; // this subject never appeared in that table
            }
            Signal& sig = stream->second.signal;
            std::vector<std::size_t> order(sig.times.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return sig.times[a].epoch_millis() < sig.times[b].epoch_millis();
            });
            Signal sorted;
            sorted.kind = sig.kind;
            sorted.times.reserve(order.size());
            for (std::size_t idx : order) {
                sorted.times.push_back(sig.times[idx]);
                if (sig.kind == ValueKind::Numeric) {
                    sorted.numbers.push_back(sig.numbers[idx]);
                } else {
                    sorted.labels.push_back(sig.labels[idx]);
                }
            }
            record.signals.emplace(rule.target, std::move(sorted));
            record.metadata.emplace(rule.target, rule.metadata);
        }
        if (cgm_mapped && record.signals.find("cgm") == record.signals.end()) {
            result.warnings.push_back("subject " + record.unique_id +
                                      " has no cgm rows; its record will fail validation");
        }
        result.records.push_back(std::move(record));
    }
    return result;
}

} // namespace diax
