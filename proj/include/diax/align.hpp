#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diax/model.hpp"

namespace diax {

/// Uniform grid over the half-open range [start, end): points are
/// start + k*step for every k with k*step < end - start. Bins hang off
/// points, so binning policies cover [start, start + size()*step).
struct Grid {
    TimedInstant start;
    TimedInstant end;
    std::int64_t step_seconds = 0;

    std::size_t size() const;
    TimedInstant point(std::size_t k) const;
    std::int64_t coverage_end_millis() const;
};

Grid make_grid(const TimedInstant& start, const TimedInstant& end, std::int64_t step_seconds);

inline double missing_value() {
    return std::numeric_limits<double>::quiet_NaN();
}
inline bool is_missing(double v) {
    return std::isnan(v);
}

/// Large enough to bridge any realistic study; small enough that
/// max_gap_seconds * 1000 cannot overflow.
inline constexpr std::int64_t kUnboundedGapSeconds = 4'000'000'000'000LL;

/// Per-column resampling behavior:
///  - Linear{max_gap}: interpolate between bracketing samples when their
///    spacing stays within max_gap; exact hits always pass through; gaps
///    wider than max_gap stay missing.
///  - Hold: last sample at or before the point; optionally gap-limited,
///    which is the missing-preserving variant of hold.
///  - SumIntoBin: impulse streams (bolus, carbs) accumulate per bin; an
///    empty bin is 0, not missing.
///  - IntegrateRate: piecewise-constant rate integrated per bin (U/h -> U).
struct Policy {
    enum class Kind { Linear, Hold, SumIntoBin, IntegrateRate };
    Kind kind = Kind::Linear;
    std::optional<std::int64_t> max_gap_seconds;

    static Policy linear(std::int64_t max_gap_seconds);
    static Policy hold();
    static Policy hold_limited(std::int64_t max_gap_seconds);
    static Policy sum();
    static Policy integrate_rate();
};

/// Resamples one numeric signal onto the grid; NaN marks missing points.
/// Unsorted input is sorted first. Throws PolicyMismatch on categorical
/// signals.
std::vector<double> resample_signal(const Signal& signal, const Grid& grid, const Policy& policy);

/// Units delivered per bin for a piecewise-constant basal rate: zero before
/// the first sample, the last rate extending to the end of grid coverage.
/// The bin total equals the analytic step-function integral. Throws
/// NegativeRate.
std::vector<double> integrate_basal(const Signal& basal_rate, const Grid& grid);

struct AlignedFrame {
    Grid grid;
    std::map<std::string, std::vector<double>> columns;
    /// Categorical signals are never resampled; they ride along as events.
    std::map<std::string, Signal> events;
};

/// Replay: every interpolatable column becomes gap-free (max_gap = grid
/// span, then nearest-value fill at the edges) -- an explicit, opt-in
/// distortion for simulation tasks. Advisor: default policies, preserving
/// missing data. Custom: defaults plus whatever overrides are given.
enum class AlignPreset { Custom, Replay, Advisor };

struct AlignOptions {
    AlignPreset preset = AlignPreset::Custom;
    std::map<std::string, Policy> policies; ///< per-key overrides
    std::vector<std::string> keys;          ///< subset to align; empty = all signals
    bool strict = true;                     ///< requested key absent -> UnknownKey
};

/// Built-in per-key defaults: cgm/smbg/heart_rate interpolate with a 30 min
/// gap cap, basal_rate integrates, bolus/basal_inj/carbs/steps sum into
/// bins, sparse constants (hba1c, height, weight) hold, anything else
/// interpolates like cgm.
Policy default_policy(std::string_view key);

AlignedFrame align_subject(const SubjectRecord& record, const Grid& grid,
                           const AlignOptions& options = {});

/// First column is the grid timestamp, one column per key in lexicographic
/// order, missing cells empty.
std::string frame_to_csv(const AlignedFrame& frame);

} // namespace diax
