#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "diax/model.hpp"

namespace diax {

/// Consensus glucose thresholds in mg/dL; every constant is overridable.
struct RangeThresholds {
    double very_low = 54.0;
    double low = 70.0;
    double high = 180.0;
    double very_high = 250.0;
};

/// gmi_pct = intercept + slope * mean_glucose(mg/dL)
struct GmiFormula {
    double intercept = 3.31;
    double slope = 0.02392;
};

/// Half-open analysis window [start, end). `partial` marks edge windows the
/// data does not reach within one nominal sampling period.
struct Window {
    TimedInstant start;
    TimedInstant end;
    bool partial = false;
};

struct WindowSpec {
    enum class Mode { ByDay, ByWeek, Custom, Rolling };
    Mode mode = Mode::ByDay;
    TimedInstant custom_start, custom_end;
    std::int64_t length_seconds = 0;
    std::int64_t stride_seconds = 0;

    static WindowSpec by_day();
    static WindowSpec by_week();
    static WindowSpec custom(const TimedInstant& start, const TimedInstant& end);
    static WindowSpec rolling(std::int64_t length_seconds, std::int64_t stride_seconds);
};

/// ByDay: local midnight-to-midnight days covering the cgm span (edge days
/// flagged partial). ByWeek: 7-day blocks anchored at the first sample's
/// midnight. Custom: the window as given. Rolling: strided windows anchored
/// at the first sample. Throws EmptySignal when the record has no cgm data.
std::vector<Window> slice_windows(const SubjectRecord& record, const WindowSpec& spec);

/// Percentage of in-window samples with lo <= value <= hi (closed interval,
/// sample counting). Throws NoData when the window holds no samples.
double time_in_range(const Signal& cgm, const Window& window, double lo, double hi);

struct MetricsConfig {
    RangeThresholds thresholds;
    GmiFormula gmi;
    /// Sampling period for wear time; 0 means the median inter-sample gap.
    double nominal_period_seconds = 0.0;
    /// Weight samples by their half-open sample-to-next interval instead of
    /// counting them.
    bool duration_weighted = false;
};

/// Metric bundle for one window. tbr_low/tar_high are cumulative (everything
/// below low / above high), so tbr_low + tir + tar_high == 100 and the
/// very_low/very_high figures nest inside them. sd and cv are NaN below two
/// samples; every metric is NaN in an n_samples == 0 placeholder.
struct GlycemicReport {
    Window window;
    std::size_t n_samples = 0;
    double wear_time_pct = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double cv_pct = 0.0;
    double gmi_pct = 0.0;
    double tir_pct = 0.0;
    double tbr_low_pct = 0.0;
    double tbr_very_low_pct = 0.0;
    double tar_high_pct = 0.0;
    double tar_very_high_pct = 0.0;
};

GlycemicReport glycemic_summary(const Signal& cgm, const Window& window,
                                const MetricsConfig& config = {});

/// Time-of-day percentile profile: samples grouped into local-time bins
/// across all days in the window; per-bin percentiles use linear
/// interpolation between closest ranks. Empty bins are NaN.
struct AgpProfile {
    int bin_minutes = 5;
    std::vector<std::size_t> counts;
    std::vector<double> p5, p25, p50, p75, p95;

    std::size_t bins() const { return counts.size(); }
};

AgpProfile agp_profile(const Signal& cgm, const Window& window, int bin_minutes);

/// One report per slice_windows window, in order; windows without samples
/// become explicit placeholders so the series has no silent holes.
std::vector<GlycemicReport> outcomes_over_time(const SubjectRecord& record,
                                               const WindowSpec& spec,
                                               const MetricsConfig& config = {});

struct AggregateStat {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::size_t n = 0;
};

/// Subject-level aggregation keyed by metric name; NaN fields drop out of
/// that metric's n. Throws EmptyCohort.
std::map<std::string, AggregateStat> cohort_aggregate(const std::vector<GlycemicReport>& reports);

/// Convenience: the whole cgm span as a single window.
Window full_span(const Signal& cgm);

/// Canonical metric names, i.e. the GlycemicReport field names.
const std::vector<std::string>& metric_names();

/// Accepts canonical names and short aliases (tir, tbr, tar, cv, gmi,
/// wear); throws UnknownMetric otherwise.
std::string canonical_metric_name(std::string_view name);

double metric_value(const GlycemicReport& report, std::string_view canonical_name);

/// Linear interpolation between closest ranks; input must be sorted.
double percentile_sorted(const std::vector<double>& sorted, double p);

/// CSV renderings used by the CLI (missing values are empty cells).
std::string reports_to_csv(std::string_view subject, const std::vector<GlycemicReport>& reports);
std::string reports_csv_header();
std::string report_csv_row(std::string_view subject, const GlycemicReport& report);
std::string agp_to_csv(const AgpProfile& profile);

} // namespace diax
