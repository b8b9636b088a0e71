#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace diax {

enum class Severity { Warning, Error };

std::string_view to_string(Severity s);

/// One problem discovered while parsing or validating a subject file.
struct Finding {
    Severity severity = Severity::Error;
    std::string code;
    std::optional<std::string> key;
    std::optional<std::size_t> sample_index;
    std::string message;

    friend bool operator==(const Finding&, const Finding&) = default;
};

namespace codes {

// errors
inline constexpr std::string_view kMalformed = "MALFORMED";
inline constexpr std::string_view kSchema = "SCHEMA";
inline constexpr std::string_view kMissingCgm = "MISSING_CGM";
inline constexpr std::string_view kLengthMismatch = "LENGTH_MISMATCH";
inline constexpr std::string_view kMissingMetadata = "MISSING_METADATA";
inline constexpr std::string_view kExtraMetadata = "EXTRA_METADATA";
inline constexpr std::string_view kUnitMismatch = "UNIT_MISMATCH";
inline constexpr std::string_view kBadCategory = "BAD_CATEGORY";
inline constexpr std::string_view kBadKey = "BAD_KEY";
inline constexpr std::string_view kBadTimestamp = "BAD_TIMESTAMP";

// warnings
inline constexpr std::string_view kUnsortedTimes = "UNSORTED_TIMES";
inline constexpr std::string_view kImplausibleValue = "IMPLAUSIBLE_VALUE";
inline constexpr std::string_view kMixedZoneAwareness = "MIXED_ZONE_AWARENESS";
inline constexpr std::string_view kNoInsulin = "NO_INSULIN";
inline constexpr std::string_view kBadFilename = "BAD_FILENAME";

} // namespace codes

} // namespace diax
