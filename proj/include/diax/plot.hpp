#pragma once

#include <string>
#include <vector>

#include "diax/metrics.hpp"

namespace diax {

struct SeriesColors {
    std::string median;
    std::string inner_band;
    std::string outer_band;
};

struct PlotStyle {
    int width = 880;
    int height = 520;
    double target_lo = 70.0; ///< horizontal guide lines (mg/dL)
    double target_hi = 180.0;
    double y_max = 350.0; ///< AGP vertical range top
    SeriesColors primary = {"#1f5fa8", "#7fb3e0", "#cfe3f5"};
    SeriesColors secondary = {"#b3541e", "#e0a37f", "#f5e0cf"};
    std::vector<std::string> labels;  ///< legend labels, one per profile/metric
    std::vector<std::string> palette; ///< outcome line colors (cycled)
};

/// One or two AGP profiles as a standalone SVG: shaded 5-95 and 25-75
/// bands plus a median line per profile over a 00:00-24:00 axis, with
/// target-band guides. Empty bins break band and line continuity. Output
/// is byte-deterministic for fixed inputs (coordinates carry exactly two
/// decimals). Throws EmptyProfile and BinMismatch.
std::string render_agp(const std::vector<AgpProfile>& profiles, const PlotStyle& style = {});

/// Windowed metric series as a standalone SVG: one polyline per selected
/// metric over window start dates; placeholder windows split lines into
/// segments. Percent metrics share the left axis; mg/dL-scaled metrics get
/// a right axis. Throws EmptySeries and UnknownMetric.
std::string render_outcomes(const std::vector<GlycemicReport>& series,
                            const std::vector<std::string>& metrics,
                            const PlotStyle& style = {});

} // namespace diax
