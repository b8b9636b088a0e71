#include "diax/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "diax/error.hpp"

namespace diax {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Severity s) {
    return s == Severity::Error ? "ERROR" : "WARNING";
}

const std::map<std::string, RegistryEntry, std::less<>>& key_registry() {
    static const std::map<std::string, RegistryEntry, std::less<>> registry = {
        {"cgm", {ValueKind::Numeric, "mg/dL"}},
        {"bolus", {ValueKind::Numeric, "U"}},
        {"basal_rate", {ValueKind::Numeric, "U/h"}},
        {"basal_inj", {ValueKind::Numeric, "U"}},
        {"carbs", {ValueKind::Numeric, "g"}},
        // Table-style label values; no fixed unit string.
        {"carb_category", {ValueKind::Categorical, ""}},
        {"smbg", {ValueKind::Numeric, "mg/dL"}},
        {"hba1c", {ValueKind::Numeric, "%"}},
        {"heart_rate", {ValueKind::Numeric, "bps"}},
        {"steps", {ValueKind::Numeric, "steps per ten seconds"}},
        {"height", {ValueKind::Numeric, "cm"}},
        {"weight", {ValueKind::Numeric, "kg"}},
    };
    return registry;
}

bool is_valid_signal_key(std::string_view name) {
    if (name.empty()) {
        return false;
    }
    for (char c : name) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) {
            return false;
        }
    }
    return true;
}

bool is_carb_category(std::string_view value) {
    return std::find(kCarbCategories.begin(), kCarbCategories.end(), value) !=
           kCarbCategories.end();
}

bool Signal::times_sorted() const {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i].epoch_millis() < times[i - 1].epoch_millis()) {
            return false;
        }
    }
    return true;
}

Signal make_numeric_signal(std::vector<TimedInstant> times, std::vector<double> values) {
    if (times.size() != values.size()) {
        throw InvariantViolation("time and value arrays differ in length");
    }
    Signal s;
    s.kind = ValueKind::Numeric;
    s.times = std::move(times);
    s.numbers = std::move(values);
    return s;
}

Signal make_categorical_signal(std::vector<TimedInstant> times, std::vector<std::string> values) {
    if (times.size() != values.size()) {
        throw InvariantViolation("time and value arrays differ in length");
    }
    Signal s;
    s.kind = ValueKind::Categorical;
    s.times = std::move(times);
    s.labels = std::move(values);
    return s;
}

const Signal* SubjectRecord::find_signal(std::string_view key) const {
    auto it = signals.find(std::string(key));
    return it == signals.end() ? nullptr : &it->second;
}

namespace {

// Shared walker behind read_subject and read_subject_lenient. In strict
// mode the first problem throws; in lenient mode problems accumulate as
// findings and parsing continues on a best-effort basis.
class DocumentReader {
public:
    DocumentReader(int fallback_offset_minutes, bool strict)
        : fallback_(fallback_offset_minutes), strict_(strict) {}

    LenientParse run(std::string_view bytes) {
        json doc;
        try {
            doc = json::parse(bytes);
        } catch (const json::exception& e) {
            fail_document(e.what());
            return std::move(out_);
        }
        if (!doc.is_object()) {
            fail_document("top-level value must be an object");
            return std::move(out_);
        }
        out_.usable = true;

        read_unique_id(doc);
        read_metadata(doc);
        read_signals(doc);
        check_coverage();
        return std::move(out_);
    }

private:
    void fail_document(const std::string& message) {
        if (strict_) {
            throw MalformedDocument(message);
        }
        out_.usable = false;
        add(codes::kMalformed, {}, {}, message);
    }

    void fail(std::string_view code, std::string key, std::optional<std::size_t> index,
              const std::string& message) {
        if (strict_) {
            const std::string where = key.empty() ? message : key + ": " + message;
            if (code == codes::kBadTimestamp) {
                throw TimestampError(where);
            }
            throw SchemaViolation(key, message);
        }
        add(code, key.empty() ? std::optional<std::string>{} : std::optional<std::string>{key},
            index, message);
    }

    void add(std::string_view code, std::optional<std::string> key,
             std::optional<std::size_t> index, std::string message) {
        out_.findings.push_back(
            {Severity::Error, std::string(code), std::move(key), index, std::move(message)});
    }

    void read_unique_id(const json& doc) {
        auto it = doc.find("unique_id");
        if (it == doc.end() || !it->is_string()) {
            fail(codes::kSchema, "unique_id", {}, "required string member missing");
            return;
        }
        out_.record.unique_id = it->get<std::string>();
        if (out_.record.unique_id.empty()) {
            fail(codes::kSchema, "unique_id", {}, "must be non-empty");
        }
    }

    void read_metadata(const json& doc) {
        auto it = doc.find("metadata");
        if (it == doc.end()) {
            return; // coverage check reports what is missing per signal
        }
        if (!it->is_object()) {
            fail(codes::kSchema, "metadata", {}, "must be an object");
            return;
        }
        for (const auto& [key, entry] : it->items()) {
            if (!is_valid_signal_key(key)) {
                fail(codes::kBadKey, "metadata." + key, {},
                     "signal keys are non-empty lowercase [a-z0-9_]");
                continue;
            }
            if (!entry.is_object()) {
                fail(codes::kSchema, "metadata." + key, {}, "must be an object");
                continue;
            }
            SignalMetadata m;
            bool ok = true;
            for (const auto& [field, value] : entry.items()) {
                if (!value.is_string()) {
                    fail(codes::kSchema, "metadata." + key + "." + field, {}, "must be a string");
                    ok = false;
                    continue;
                }
                const std::string text = value.get<std::string>();
                if (field == "unit") {
                    m.unit = text;
                } else if (field == "description") {
                    m.description = text;
                } else if (field == "device") {
                    m.device = text;
                } else if (field == "precision") {
                    m.precision = text;
                } else if (field == "insulin") {
                    m.insulin = text;
                } else if (field == "medication") {
                    m.medication = text;
                } else {
                    fail(codes::kSchema, "metadata." + key + "." + field, {},
                         "unknown metadata field");
                    ok = false;
                }
            }
            if (m.unit.empty()) {
                fail(codes::kMissingMetadata, key, {}, "metadata.unit missing or empty");
                ok = false;
            }
            if (m.description.empty()) {
                fail(codes::kMissingMetadata, key, {}, "metadata.description missing or empty");
                ok = false;
            }
            if (ok || !strict_) {
                out_.record.metadata.emplace(key, std::move(m));
            }
        }
    }

    ValueKind kind_for(const std::string& key) const {
        if (auto it = key_registry().find(key); it != key_registry().end()) {
            return it->second.kind;
        }
        if (auto it = out_.record.metadata.find(key); it != out_.record.metadata.end()) {
            if (it->second.precision && *it->second.precision == "categorical") {
                return ValueKind::Categorical;
            }
        }
        return ValueKind::Numeric;
    }

    void read_signals(const json& doc) {
        for (const auto& [key, entry] : doc.items()) {
            if (key == "unique_id" || key == "metadata") {
                continue;
            }
            if (!is_valid_signal_key(key)) {
                fail(codes::kBadKey, key, {}, "signal keys are non-empty lowercase [a-z0-9_]");
                continue;
            }
            if (!entry.is_object()) {
                fail(codes::kSchema, key, {}, "signal must be an object");
                continue;
            }
            for (const auto& item : entry.items()) {
                if (item.key() != "time" && item.key() != "value") {
                    fail(codes::kSchema, key + "." + item.key(), {},
                         "signal objects carry exactly 'time' and 'value'");
                }
            }
            auto t_it = entry.find("time");
            auto v_it = entry.find("value");
            if (t_it == entry.end() || !t_it->is_array() || v_it == entry.end() ||
                !v_it->is_array()) {
                fail(codes::kSchema, key, {}, "'time' and 'value' must be arrays");
                continue;
            }
            if (t_it->size() != v_it->size()) {
                fail(codes::kLengthMismatch, key, {},
                     "time has " + std::to_string(t_it->size()) + " entries, value has " +
                         std::to_string(v_it->size()));
            }

            Signal sig;
            sig.kind = kind_for(key);
            const std::size_t n = std::min(t_it->size(), v_it->size());
            for (std::size_t i = 0; i < n; ++i) {
                const json& tj = (*t_it)[i];
                const json& vj = (*v_it)[i];
                if (!tj.is_string()) {
                    fail(codes::kSchema, key, i, "timestamps must be strings");
                    continue;
                }
                TimedInstant instant;
                try {
                    instant = parse_timestamp(tj.get<std::string>(), fallback_);
                } catch (const TimestampError& e) {
                    fail(codes::kBadTimestamp, key, i, e.what());
                    continue;
                }
                if (sig.kind == ValueKind::Numeric) {
                    if (!vj.is_number()) {
                        fail(codes::kSchema, key, i, "values must be numbers");
                        continue;
                    }
                    const double v = vj.get<double>();
                    if (!std::isfinite(v)) {
                        fail(codes::kSchema, key, i, "values must be finite");
                        continue;
                    }
                    sig.times.push_back(instant);
                    sig.numbers.push_back(v);
                } else {
                    if (!vj.is_string()) {
                        fail(codes::kSchema, key, i, "values must be category strings");
                        continue;
                    }
                    std::string label = vj.get<std::string>();
                    if (key == "carb_category" && !is_carb_category(label)) {
                        fail(codes::kBadCategory, key, i, "'" + label + "' is not a carb category");
                        continue;
                    }
                    sig.times.push_back(instant);
                    sig.labels.push_back(std::move(label));
                }
            }
            out_.record.signals.emplace(key, std::move(sig));
        }
    }

    void check_coverage() {
        if (out_.record.signals.find("cgm") == out_.record.signals.end()) {
            fail(codes::kMissingCgm, "cgm", {}, "required signal missing");
        }
        for (const auto& kv : out_.record.signals) {
            if (out_.record.metadata.find(kv.first) == out_.record.metadata.end()) {
                fail(codes::kMissingMetadata, kv.first, {}, "signal has no metadata entry");
            }
        }
        for (const auto& kv : out_.record.metadata) {
            if (out_.record.signals.find(kv.first) == out_.record.signals.end()) {
                fail(codes::kExtraMetadata, kv.first, {}, "metadata entry has no matching signal");
            }
        }
    }

    int fallback_;
    bool strict_;
    LenientParse out_;
};

void check_record_invariants(const SubjectRecord& r) {
    if (r.unique_id.empty()) {
        throw InvariantViolation("unique_id must be non-empty");
    }
    if (r.signals.find("cgm") == r.signals.end()) {
        throw InvariantViolation("required signal 'cgm' missing");
    }
    for (const auto& [key, sig] : r.signals) {
        if (!is_valid_signal_key(key)) {
            throw InvariantViolation("bad signal key '" + key + "'");
        }
        const std::size_t values =
            sig.kind == ValueKind::Numeric ? sig.numbers.size() : sig.labels.size();
        if (sig.times.size() != values) {
            throw InvariantViolation(key + ": time and value arrays differ in length");
        }
        auto reg = key_registry().find(key);
        if (reg != key_registry().end() && reg->second.kind != sig.kind) {
            throw InvariantViolation(key + ": wrong value kind for this key");
        }
        if (sig.kind == ValueKind::Numeric) {
            for (double v : sig.numbers) {
                if (!std::isfinite(v)) {
                    throw InvariantViolation(key + ": values must be finite");
                }
            }
        } else if (key == "carb_category") {
            for (const auto& label : sig.labels) {
                if (!is_carb_category(label)) {
                    throw InvariantViolation(key + ": '" + label + "' is not a carb category");
                }
            }
        }
        auto md = r.metadata.find(key);
        if (md == r.metadata.end()) {
            throw InvariantViolation(key + ": metadata entry missing");
        }
        if (md->second.unit.empty() || md->second.description.empty()) {
            throw InvariantViolation(key + ": metadata unit/description must be non-empty");
        }
        if (reg != key_registry().end() && !reg->second.unit.empty() &&
            md->second.unit != reg->second.unit) {
            throw InvariantViolation(key + ": unit must be '" + reg->second.unit + "'");
        }
    }
    for (const auto& kv : r.metadata) {
        if (r.signals.find(kv.first) == r.signals.end()) {
            throw InvariantViolation("metadata." + kv.first + ": no matching signal");
        }
    }
}

} // namespace

SubjectRecord read_subject(std::string_view bytes, int fallback_offset_minutes) {
    DocumentReader reader(fallback_offset_minutes, /*strict=*/true);
    return reader.run(bytes).record;
}

LenientParse read_subject_lenient(std::string_view bytes, int fallback_offset_minutes) {
    DocumentReader reader(fallback_offset_minutes, /*strict=*/false);
    return reader.run(bytes);
}

std::string write_subject(const SubjectRecord& record) {
    check_record_invariants(record);

    ordered_json doc;
    doc["unique_id"] = record.unique_id;
    for (const auto& [key, sig] : record.signals) {
        std::vector<std::size_t> order(sig.times.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sig.times[a].epoch_millis() < sig.times[b].epoch_millis();
        });

        json times = json::array();
        json values = json::array();
        for (std::size_t i : order) {
            times.push_back(format_timestamp(sig.times[i]));
            if (sig.kind == ValueKind::Numeric) {
                values.push_back(sig.numbers[i]);
            } else {
                values.push_back(sig.labels[i]);
            }
        }
        ordered_json entry;
        entry["time"] = std::move(times);
        entry["value"] = std::move(values);
        doc[key] = std::move(entry);
    }
    ordered_json metadata;
    for (const auto& [key, m] : record.metadata) {
        ordered_json entry;
        entry["unit"] = m.unit;
        entry["description"] = m.description;
        if (m.device) {
            entry["device"] = *m.device;
        }
        if (m.precision) {
            entry["precision"] = *m.precision;
        }
        if (m.insulin) {
            entry["insulin"] = *m.insulin;
        }
        if (m.medication) {
            entry["medication"] = *m.medication;
        }
        metadata[key] = std::move(entry);
    }
    doc["metadata"] = std::move(metadata);
    return doc.dump(2) + "\n";
}

SubjectRecord read_subject_file(const std::filesystem::path& path, int fallback_offset_minutes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_subject(buf.str(), fallback_offset_minutes);
}

void write_subject_file(const std::filesystem::path& path, const SubjectRecord& record) {
    const std::string body = write_subject(record);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoFailure("cannot open " + path.string() + " for writing");
    }
    out << body;
    if (!out) {
        throw IoFailure("write failed: " + path.string());
    }
}

namespace {

bool is_name_component_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
}

bool is_name_component(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_name_component_char);
}

} // namespace

SubjectFilename parse_subject_filename(std::string_view name) {
    constexpr std::string_view prefix = "subj_";
    constexpr std::string_view suffix = ".json";
    if (name.size() <= prefix.size() + suffix.size() || name.substr(0, prefix.size()) != prefix ||
        name.substr(name.size() - suffix.size()) != suffix) {
        throw BadFilename("expected subj_<trial>_<id>.json, got '" + std::string(name) + "'");
    }
    const std::string_view middle =
        name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    const std::size_t sep = middle.find('_');
    if (sep == std::string_view::npos) {
        throw BadFilename("expected subj_<trial>_<id>.json, got '" + std::string(name) + "'");
    }
    const std::string_view trial = middle.substr(0, sep);
    const std::string_view id = middle.substr(sep + 1);
    if (!is_name_component(trial) || !is_name_component(id)) {
        throw BadFilename("trial and id are letters, digits, and hyphens; got '" +
                          std::string(name) + "'");
    }
    return {std::string(trial), std::string(id)};
}

std::string format_subject_filename(std::string_view trial, std::string_view subject_id) {
    if (!is_name_component(trial)) {
        throw BadComponent("trial must be non-empty letters/digits/hyphens without underscores");
    }
    if (!is_name_component(subject_id)) {
        throw BadComponent("subject id must be non-empty letters/digits/hyphens");
    }
    std::string out;
    out.reserve(5 + trial.size() + 1 + subject_id.size() + 5);
    out += "subj_";
    out += trial;
    out += '_';
    out += subject_id;
    out += ".json";
    return out;
}

} // namespace diax
