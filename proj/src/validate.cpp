#include "diax/validate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "diax/error.hpp"

namespace diax {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t ValidationReport::errors() const {
    return std::size_t(std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
        return f.severity == Severity::Error;
    }));
}

std::size_t ValidationReport::warnings() const {
    return findings.size() - errors();
}

namespace {

void add(ValidationReport& r, Severity sev, std::string_view code,
         std::optional<std::string> key, std::optional<std::size_t> index, std::string message) {
    r.findings.push_back({sev, std::string(code), std::move(key), index, std::move(message)});
}

void check_values(ValidationReport& r, const std::string& key, const Signal& sig, double lo,
                  double hi) {
    for (std::size_t i = 0; i < sig.numbers.size(); ++i) {
        const double v = sig.numbers[i];
        if (v < lo || v > hi) {
            std::ostringstream msg;
            msg << v << " outside plausible range [" << lo << ", " << hi << "]";
            add(r, Severity::Warning, codes::kImplausibleValue, key, i, msg.str());
        }
    }
}

} // namespace

ValidationReport validate_subject(const SubjectRecord& record, const PlausibilityBounds& bounds) {
    ValidationReport r;

    if (record.signals.find("cgm") == record.signals.end()) {
        add(r, Severity::Error, codes::kMissingCgm, "cgm", {}, "required signal missing");
    }

    for (const auto& [key, sig] : record.signals) {
        if (!is_valid_signal_key(key)) {
            add(r, Severity::Error, codes::kBadKey, key, {},
                "signal keys are non-empty lowercase [a-z0-9_]");
        }

        const std::size_t values =
            sig.kind == ValueKind::Numeric ? sig.numbers.size() : sig.labels.size();
        if (sig.times.size() != values) {
            add(r, Severity::Error, codes::kLengthMismatch, key, {},
                "time has " + std::to_string(sig.times.size()) + " entries, value has " +
                    std::to_string(values));
        }

        auto md = record.metadata.find(key);
        if (md == record.metadata.end()) {
            add(r, Severity::Error, codes::kMissingMetadata, key, {},
                "signal has no metadata entry");
        } else {
            if (md->second.unit.empty()) {
                add(r, Severity::Error, codes::kMissingMetadata, key, {},
                    "metadata.unit missing or empty");
            }
            if (md->second.description.empty()) {
                add(r, Severity::Error, codes::kMissingMetadata, key, {},
                    "metadata.description missing or empty");
            }
            auto reg = key_registry().find(key);
            if (reg != key_registry().end() && !reg->second.unit.empty() &&
                !md->second.unit.empty() && md->second.unit != reg->second.unit) {
                add(r, Severity::Error, codes::kUnitMismatch, key, {},
                    "unit '" + md->second.unit + "' must be '" + reg->second.unit + "'");
            }
        }

        auto reg = key_registry().find(key);
        if (reg != key_registry().end() && reg->second.kind != sig.kind) {
            add(r, Severity::Error, codes::kSchema, key, {}, "wrong value kind for this key");
        }

        if (key == "carb_category") {
            for (std::size_t i = 0; i < sig.labels.size(); ++i) {
                if (!is_carb_category(sig.labels[i])) {
                    add(r, Severity::Error, codes::kBadCategory, key, i,
                        "'" + sig.labels[i] + "' is not a carb category");
                }
            }
        }

        if (sig.kind == ValueKind::Numeric) {
            for (std::size_t i = 0; i < sig.numbers.size(); ++i) {
                if (!std::isfinite(sig.numbers[i])) {
                    add(r, Severity::Error, codes::kSchema, key, i, "values must be finite");
                }
            }
        }

        if (!sig.times_sorted()) {
            add(r, Severity::Warning, codes::kUnsortedTimes, key, {},
                "timestamps are not in ascending order");
        }

        bool has_aware = false;
        bool has_naive = false;
        for (const auto& t : sig.times) {
            (t.zone_aware ? has_aware : has_naive) = true;
        }
        if (has_aware && has_naive) {
            add(r, Severity::Warning, codes::kMixedZoneAwareness, key, {},
                "signal mixes zone-aware and naive timestamps");
        }

        if (key == "cgm" || key == "smbg") {
            check_values(r, key, sig, bounds.glucose_lo, bounds.glucose_hi);
        } else if (key == "bolus") {
            check_values(r, key, sig, bounds.bolus_lo, bounds.bolus_hi);
        } else if (key == "basal_rate") {
            check_values(r, key, sig, bounds.basal_lo, bounds.basal_hi);
        } else if (key == "carbs") {
            check_values(r, key, sig, bounds.carbs_lo, bounds.carbs_hi);
        }
    }

    for (const auto& kv : record.metadata) {
        if (record.signals.find(kv.first) == record.signals.end()) {
            add(r, Severity::Error, codes::kExtraMetadata, kv.first, {},
                "metadata entry has no matching signal");
        }
    }

    const bool has_insulin = record.signals.count("bolus") || record.signals.count("basal_rate") ||
                             record.signals.count("basal_inj");
    if (!has_insulin) {
        add(r, Severity::Warning, codes::kNoInsulin, {}, {},
            "no insulin stream (bolus, basal_rate, or basal_inj) present");
    }

    return r;
}

namespace {

struct FileCheck {
    ValidationReport report;
    bool usable = false;
    double cgm_span_hours = 0.0;
};

FileCheck check_file(const std::filesystem::path& file, int fallback_offset_minutes) {
    FileCheck out;
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        add(out.report, Severity::Error, codes::kMalformed, {}, {}, "cannot open file");
        return out;
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    const LenientParse parsed = read_subject_lenient(buf.str(), fallback_offset_minutes);
    out.report.findings = parsed.findings;
    out.usable = parsed.usable;
    if (!parsed.usable) {
        return out;
    }

    // merge, deduplicating what the lenient parser already reported
    std::set<std::tuple<int, std::string, std::string, long long>> seen;
    for (const auto& f : out.report.findings) {
        seen.insert({int(f.severity), f.code, f.key.value_or(""),
                     f.sample_index ? (long long)*f.sample_index : -1});
    }
    for (auto& f : validate_subject(parsed.record).findings) {
        if (seen.insert({int(f.severity), f.code, f.key.value_or(""),
                         f.sample_index ? (long long)*f.sample_index : -1})
                .second) {
            out.report.findings.push_back(std::move(f));
        }
    }

    const Signal* cgm = parsed.record.find_signal("cgm");
    if (cgm != nullptr && !cgm->times.empty()) {
        auto [lo, hi] = std::minmax_element(
            cgm->times.begin(), cgm->times.end(),
            [](const auto& a, const auto& b) { return a.epoch_millis() < b.epoch_millis(); });
        out.cgm_span_hours = double(hi->epoch_millis() - lo->epoch_millis()) / 3.6e6;
    }
    return out;
}

} // namespace

ValidationReport validate_subject_file(const std::filesystem::path& file,
                                       int fallback_offset_minutes) {
    return check_file(file, fallback_offset_minutes).report;
}

DatasetValidation validate_dataset(const std::filesystem::path& dir, int fallback_offset_minutes,
                                   unsigned threads) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw IoFailure("not a readable directory: " + dir.string());
    }

    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());

    struct Slot {
        ValidationReport report;
        double span_hours = 0.0;
        bool is_subject = false;
    };
    std::vector<Slot> slots(names.size());

    auto work = [&](std::size_t i) {
        const std::string& name = names[i];
        Slot& slot = slots[i];
        try {
            (void)parse_subject_filename(name);
        } catch (const BadFilename&) {
            add(slot.report, Severity::Warning, codes::kBadFilename, {}, {},
                "does not match subj_<trial>_<id>.json");
            return;
        }
        FileCheck check = check_file(dir / name, fallback_offset_minutes);
        slot.report = std::move(check.report);
        slot.span_hours = check.cgm_span_hours;
        slot.is_subject = check.usable;
    };

    unsigned n_threads = threads == 0 ? std::thread::hardware_concurrency() : threads;
    n_threads = std::max(1u, std::min<unsigned>(n_threads, unsigned(names.size())));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < names.size(); i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    DatasetValidation out;
    out.reports.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        Slot& slot = slots[i];
        if (slot.is_subject) {
            ++out.summary.subjects;
            out.summary.patient_hours += slot.span_hours;
        }
        out.summary.errors += slot.report.errors();
        out.summary.warnings += slot.report.warnings();
        for (const auto& f : slot.report.findings) {
            ++out.summary.by_code[f.code];
        }
        out.reports.emplace_back(names[i], std::move(slot.report));
    }
    return out;
}

std::string findings_to_jsonl(std::string_view file, const ValidationReport& report) {
    std::string out;
    for (const auto& f : report.findings) {
        ordered_json line;
        line["file"] = std::string(file);
        line["severity"] = std::string(to_string(f.severity));
        line["code"] = f.code;
        line["key"] = f.key ? json(*f.key) : json(nullptr);
        line["index"] = f.sample_index ? json(*f.sample_index) : json(nullptr);
        line["message"] = f.message;
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::string findings_to_jsonl(const DatasetValidation& dataset) {
    std::string out;
    for (const auto& [file, report] : dataset.reports) {
        out += findings_to_jsonl(file, report);
    }
    return out;
}

std::vector<std::pair<std::string, Finding>> findings_from_jsonl(std::string_view text) {
    std::vector<std::pair<std::string, Finding>> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        const std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedDocument("findings line " + std::to_string(line_no) + ": " + e.what());
        }
        Finding f;
        const std::string sev = j.at("severity").get<std::string>();
        if (sev != "ERROR" && sev != "WARNING") {
            throw MalformedDocument("findings line " + std::to_string(line_no) +
                                    ": bad severity '" + sev + "'");
        }
        f.severity = sev == "ERROR" ? Severity::Error : Severity::Warning;
        f.code = j.at("code").get<std::string>();
        if (j.contains("key") && !j.at("key").is_null()) {
            f.key = j.at("key").get<std::string>();
        }
        if (j.contains("index") && !j.at("index").is_null()) {
            f.sample_index = j.at("index").get<std::size_t>();
        }
        f.message = j.at("message").get<std::string>();
        out.emplace_back(j.at("file").get<std::string>(), std::move(f));
    }
    return out;
}

} // namespace diax
