#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diax/findings.hpp"
#include "diax/timeparse.hpp"

namespace diax {

enum class ValueKind { Numeric, Categorical };

/// Registry facts for the well-known signal keys. Keys outside the registry
/// are permitted; they default to numeric values and carry whatever unit
/// their metadata declares.
struct RegistryEntry {
    ValueKind kind = ValueKind::Numeric;
    std::string unit; ///< canonical unit; empty when the key fixes none
};

const std::map<std::string, RegistryEntry, std::less<>>& key_registry();

/// Signal keys are non-empty lowercase ASCII: [a-z0-9_].
bool is_valid_signal_key(std::string_view name);

inline constexpr std::array<std::string_view, 5> kCarbCategories = {"HT", "Less", "Typical",
                                                                    "More", "Ann"};
bool is_carb_category(std::string_view value);

/// Two parallel arrays: timestamps and measurements. Numeric for every key
/// except carb_category (and extension keys declaring precision
/// "categorical"), which hold category labels instead.
struct Signal {
    ValueKind kind = ValueKind::Numeric;
    std::vector<TimedInstant> times;
    std::vector<double> numbers;     ///< populated when kind == Numeric
    std::vector<std::string> labels; ///< populated when kind == Categorical

    std::size_t size() const {
        return kind == ValueKind::Numeric ? numbers.size() : labels.size();
    }
    bool times_sorted() const;

    friend bool operator==(const Signal&, const Signal&) = default;
};

Signal make_numeric_signal(std::vector<TimedInstant> times, std::vector<double> values);
Signal make_categorical_signal(std::vector<TimedInstant> times, std::vector<std::string> values);

struct SignalMetadata {
    std::string unit;
    std::string description;
    std::optional<std::string> device;
    std::optional<std::string> precision;
    std::optional<std::string> insulin;
    std::optional<std::string> medication;

    friend bool operator==(const SignalMetadata&, const SignalMetadata&) = default;
};

/// One subject's full content: id, signal map, per-signal metadata.
/// Maps are keyed by signal name; std::map keeps them in the canonical
/// lexicographic order.
struct SubjectRecord {
    std::string unique_id;
    std::map<std::string, Signal> signals;
    std::map<std::string, SignalMetadata> metadata;

    const Signal* find_signal(std::string_view key) const;

    friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

/// Strict reader: parses a subject document and checks the structural
/// invariants (parallel lengths, required cgm, metadata coverage, category
/// membership, key charset). Naive timestamps resolve against
/// fallback_offset_minutes. Throws MalformedDocument, SchemaViolation, or
/// TimestampError.
SubjectRecord read_subject(std::string_view bytes, int fallback_offset_minutes = 0);

/// Best-effort reader for validation pipelines: never throws on content;
/// collects structural problems as findings and returns whatever could be
/// salvaged. `usable` is false only when the document is not JSON at all.
struct LenientParse {
    SubjectRecord record;
    std::vector<Finding> findings;
    bool usable = false;
};
LenientParse read_subject_lenient(std::string_view bytes, int fallback_offset_minutes = 0);

/// Canonical writer: "unique_id" first, signal keys in ascending
/// lexicographic order, then "metadata" in the same key order; 2-space
/// indentation; signals sorted by time (stable). read(write(r)) == r and
/// write(read(write(r))) == write(r) byte for byte. Throws
/// InvariantViolation on inconsistent records.
std::string write_subject(const SubjectRecord& record);

SubjectRecord read_subject_file(const std::filesystem::path& path,
                                int fallback_offset_minutes = 0);
void write_subject_file(const std::filesystem::path& path, const SubjectRecord& record);

/// "subj_<trial>_<id>.json"; trial and id are letters, digits, and hyphens.
struct SubjectFilename {
    std::string trial;
    std::string subject_id;

    friend bool operator==(const SubjectFilename&, const SubjectFilename&) = default;
};
SubjectFilename parse_subject_filename(std::string_view name);
std::string format_subject_filename(std::string_view trial, std::string_view subject_id);

} // namespace diax
