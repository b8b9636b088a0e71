#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace diax {

inline constexpr int kMaxOffsetMinutes = 18 * 60;

/// One instant on the time line, with millisecond resolution.
///
/// Stamps parsed from text that carried an offset ("+00:00", "-0500", "Z")
/// are zone-aware. Naive stamps resolve against a caller-supplied fallback
/// offset so they are comparable across signals, but keep zone_aware=false
/// so formatting reproduces the original wall-clock digits without
/// inventing an offset suffix.
struct TimedInstant {
    std::int64_t epoch_seconds = 0; ///< seconds since 1970-01-01T00:00:00Z
    int millis = 0;                 ///< [0, 1000)
    int offset_minutes = 0;         ///< offset the wall-clock digits resolve against
    bool zone_aware = false;        ///< true iff the source text carried an offset

    std::int64_t epoch_millis() const { return epoch_seconds * 1000 + millis; }

    // Lexicographic on (epoch_seconds, millis, ...): chronological first,
    // structural tie-break so equality distinguishes naive from aware stamps.
    friend constexpr auto operator<=>(const TimedInstant&, const TimedInstant&) = default;
};

/// Parses "YYYY-MM-DD HH:MM:SS[.fff][ ][±HH:MM | ±HHMM | Z]"; also accepts
/// 'T' as the date/time separator. Calendar fields are range-checked,
/// including leap years. Throws TimestampError.
TimedInstant parse_timestamp(std::string_view text, int fallback_offset_minutes);

/// Parses with an explicit strftime-like pattern (%Y %m %d %H %M %S %I %p
/// %z %%, plus the whole-string forms "epoch_s" / "epoch_ms"). Used by
/// mapping specs whose sources do not speak the native grammar.
TimedInstant parse_timestamp_format(std::string_view text, std::string_view pattern,
                                    int fallback_offset_minutes);

/// Zone-aware instants render as "YYYY-MM-DD HH:MM:SS ±HH:MM" in their own
/// offset; naive instants render without the suffix, reproducing the
/// wall-clock digits they were parsed from. A nonzero fractional part
/// renders as ".fff".
std::string format_timestamp(const TimedInstant& t);

/// Builds an instant from civil fields (proleptic Gregorian). Throws
/// TimestampError on out-of-range fields.
TimedInstant make_instant(int year, int month, int day, int hour, int minute, int second,
                          int offset_minutes, bool zone_aware, int millis = 0);

/// Returns t shifted by whole seconds, keeping offset and awareness.
TimedInstant advance(const TimedInstant& t, std::int64_t delta_seconds);
TimedInstant advance_millis(const TimedInstant& t, std::int64_t delta_millis);

/// Civil (wall-clock) fields of an instant under its own offset.
struct CivilTime {
    int year, month, day, hour, minute, second, millis;
};
CivilTime civil_fields(const TimedInstant& t);

/// Seconds elapsed since local midnight of the instant's own wall clock.
std::int64_t seconds_of_local_day(const TimedInstant& t);

/// Local midnight at or before the instant (same offset and awareness).
TimedInstant floor_to_local_day(const TimedInstant& t);

/// "±HH:MM", "±HHMM", or "Z" → signed minutes. Used by --fallback-offset.
int parse_offset_spec(std::string_view text);

/// Signed minutes → "±HH:MM".
std::string format_offset(int offset_minutes);

} // namespace diax
