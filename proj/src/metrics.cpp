#include "diax/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "diax/csv.hpp"
#include "diax/error.hpp"

namespace diax {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_thresholds(const RangeThresholds& t) {
    if (!(t.very_low < t.low && t.low < t.high && t.high < t.very_high)) {
        throw InvariantViolation("thresholds must satisfy very_low < low < high < very_high");
    }
}

struct SortedSeries {
    std::vector<std::int64_t> times_ms;
    std::vector<double> values;
    std::vector<std::int64_t> local_day_seconds; // per sample, for AGP binning

    // half-open [first, last) index range of samples inside the window
    std::pair<std::size_t, std::size_t> range(const Window& w) const {
        const auto lo = std::lower_bound(times_ms.begin(), times_ms.end(), w.start.epoch_millis());
        const auto hi = std::lower_bound(lo, times_ms.end(), w.end.epoch_millis());
        return {std::size_t(lo - times_ms.begin()), std::size_t(hi - times_ms.begin())};
    }
};

bool in_window(const Window& w, std::int64_t t_ms) {
    return t_ms >= w.start.epoch_millis() && t_ms < w.end.epoch_millis();
}

SortedSeries sorted_series(const Signal& cgm) {
    std::vector<std::size_t> order(cgm.times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!cgm.times_sorted()) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return cgm.times[a].epoch_millis() < cgm.times[b].epoch_millis();
        });
    }
    SortedSeries out;
    out.times_ms.reserve(order.size());
    out.values.reserve(order.size());
    out.local_day_seconds.reserve(order.size());
    for (std::size_t i : order) {
        out.times_ms.push_back(cgm.times[i].epoch_millis());
        out.values.push_back(cgm.numbers[i]);
        out.local_day_seconds.push_back(seconds_of_local_day(cgm.times[i]));
    }
    return out;
}

double median_gap_seconds(const std::vector<std::int64_t>& times_ms, std::size_t first,
                          std::size_t last) {
    if (last - first < 2) {
        return kNan;
    }
    std::vector<std::int64_t> gaps;
    gaps.reserve(last - first - 1);
    for (std::size_t i = first + 1; i < last; ++i) {
        gaps.push_back(times_ms[i] - times_ms[i - 1]);
    }
    std::sort(gaps.begin(), gaps.end());
    const std::size_t n = gaps.size();
    const double mid = n % 2 == 1 ? double(gaps[n / 2])
                                  : 0.5 * double(gaps[n / 2 - 1] + gaps[n / 2]);
    return mid / 1000.0;
}

double median_gap_seconds(const std::vector<std::int64_t>& times_ms) {
    return median_gap_seconds(times_ms, 0, times_ms.size());
}

const Signal& require_cgm(const SubjectRecord& record) {
    const Signal* cgm = record.find_signal("cgm");
    if (cgm == nullptr || cgm->size() == 0) {
        throw EmptySignal("record " + record.unique_id + " has no cgm samples");
    }
    return *cgm;
}

std::pair<TimedInstant, TimedInstant> time_extent(const Signal& cgm) {
    auto lt = [](const TimedInstant& a, const TimedInstant& b) {
        return a.epoch_millis() < b.epoch_millis();
    };
    const auto lo = *std::min_element(cgm.times.begin(), cgm.times.end(), lt);
    const auto hi = *std::max_element(cgm.times.begin(), cgm.times.end(), lt);
    return {lo, hi};
}

void flag_partial(std::vector<Window>& windows, const Signal& cgm) {
    if (windows.empty()) {
        return;
    }
    std::vector<std::int64_t> times;
    times.reserve(cgm.times.size());
    for (const auto& t : cgm.times) {
        times.push_back(t.epoch_millis());
    }
    std::sort(times.begin(), times.end());
    const double gap_s = median_gap_seconds(times);
    const std::int64_t slack_ms =
        std::isnan(gap_s) ? 0 : std::int64_t(std::llround(gap_s * 1000.0));
    const std::int64_t first = times.front();
    const std::int64_t last = times.back();
    for (auto& w : windows) {
        const bool head_short = first - w.start.epoch_millis() > slack_ms;
        const bool tail_short = w.end.epoch_millis() - last > slack_ms;
        w.partial = head_short || tail_short;
    }
}

} // namespace

WindowSpec WindowSpec::by_day() {
    WindowSpec s;
    s.mode = Mode::ByDay;
    return s;
}

WindowSpec WindowSpec::by_week() {
    WindowSpec s;
    s.mode = Mode::ByWeek;
    return s;
}

WindowSpec WindowSpec::custom(const TimedInstant& start, const TimedInstant& end) {
    if (start.epoch_millis() >= end.epoch_millis()) {
        throw InvariantViolation("custom window start must precede its end");
    }
    WindowSpec s;
    s.mode = Mode::Custom;
    s.custom_start = start;
    s.custom_end = end;
    return s;
}

WindowSpec WindowSpec::rolling(std::int64_t length_seconds, std::int64_t stride_seconds) {
    if (length_seconds <= 0 || stride_seconds <= 0) {
        throw InvariantViolation("rolling length and stride must be positive");
    }
    WindowSpec s;
    s.mode = Mode::Rolling;
    s.length_seconds = length_seconds;
    s.stride_seconds = stride_seconds;
    return s;
}

std::vector<Window> slice_windows(const SubjectRecord& record, const WindowSpec& spec) {
    const Signal& cgm = require_cgm(record);
    const auto [first, last] = time_extent(cgm);

    std::vector<Window> windows;
    switch (spec.mode) {
    case WindowSpec::Mode::ByDay: {
        TimedInstant day = floor_to_local_day(first);
        while (day.epoch_millis() <= last.epoch_millis()) {
            windows.push_back({day, advance(day, 86400), false});
            day = advance(day, 86400);
        }
        break;
    }
    case WindowSpec::Mode::ByWeek: {
        TimedInstant block = floor_to_local_day(first);
        while (block.epoch_millis() <= last.epoch_millis()) {
            windows.push_back({block, advance(block, 7 * 86400), false});
            block = advance(block, 7 * 86400);
        }
        break;
    }
    case WindowSpec::Mode::Custom:
        windows.push_back({spec.custom_start, spec.custom_end, false});
        break;
    case WindowSpec::Mode::Rolling: {
        TimedInstant start = first;
        while (start.epoch_millis() <= last.epoch_millis()) {
            windows.push_back({start, advance(start, spec.length_seconds), false});
            start = advance(start, spec.stride_seconds);
        }
        break;
    }
    }
    flag_partial(windows, cgm);
    return windows;
}

double time_in_range(const Signal& cgm, const Window& window, double lo, double hi) {
    if (lo >= hi) {
        throw InvariantViolation("time_in_range needs lo < hi");
    }
    std::size_t total = 0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < cgm.size(); ++i) {
        if (!in_window(window, cgm.times[i].epoch_millis())) {
            continue;
        }
        ++total;
        const double v = cgm.numbers[i];
        if (v >= lo && v <= hi) {
            ++inside;
        }
    }
    if (total == 0) {
        throw NoData("no samples in window");
    }
    return 100.0 * double(inside) / double(total);
}

namespace {

GlycemicReport summary_over(const SortedSeries& s, std::size_t first, std::size_t last,
                            const Window& window, const MetricsConfig& config) {
    const std::size_t n = last - first;
    GlycemicReport r;
    r.window = window;
    r.n_samples = n;

    double sum = 0.0;
    for (std::size_t i = first; i < last; ++i) {
        sum += s.values[i];
    }
    r.mean = sum / double(n);

    if (n >= 2) {
        double ss = 0.0;
        for (std::size_t i = first; i < last; ++i) {
            ss += (s.values[i] - r.mean) * (s.values[i] - r.mean);
        }
        r.sd = std::sqrt(ss / double(n - 1));
        r.cv_pct = r.mean != 0.0 ? 100.0 * r.sd / r.mean : kNan;
    } else {
        r.sd = kNan;
        r.cv_pct = kNan;
    }

    r.gmi_pct = config.gmi.intercept + config.gmi.slope * r.mean;

    // five bands partition the line; low/high report cumulatively
    const RangeThresholds& t = config.thresholds;
    double w_very_low = 0, w_low = 0, w_in = 0, w_high = 0, w_very_high = 0, w_total = 0;
    for (std::size_t i = first; i < last; ++i) {
        double weight = 1.0;
        if (config.duration_weighted) {
            const std::int64_t next = i + 1 < last ? s.times_ms[i + 1] : window.end.epoch_millis();
            weight = double(next - s.times_ms[i]);
            if (weight <= 0.0) {
                continue;
            }
        }
        const double v = s.values[i];
        w_total += weight;
        if (v < t.very_low) {
            w_very_low += weight;
        } else if (v < t.low) {
            w_low += weight;
        } else if (v <= t.high) {
            w_in += weight;
        } else if (v <= t.very_high) {
            w_high += weight;
        } else {
            w_very_high += weight;
        }
    }
    if (w_total <= 0.0) {
        throw NoData("no weighted samples in window");
    }
    r.tbr_very_low_pct = 100.0 * w_very_low / w_total;
    r.tbr_low_pct = 100.0 * (w_very_low + w_low) / w_total;
    r.tir_pct = 100.0 * w_in / w_total;
    r.tar_very_high_pct = 100.0 * w_very_high / w_total;
    r.tar_high_pct = 100.0 * (w_high + w_very_high) / w_total;

    double period_s = config.nominal_period_seconds;
    if (period_s <= 0.0) {
        period_s = median_gap_seconds(s.times_ms, first, last);
    }
    const double window_s =
        double(window.end.epoch_millis() - window.start.epoch_millis()) / 1000.0;
    if (std::isnan(period_s) || window_s <= 0.0) {
        r.wear_time_pct = kNan;
    } else {
        r.wear_time_pct = std::min(100.0, 100.0 * double(n) * period_s / window_s);
    }
    return r;
}

} // namespace

GlycemicReport glycemic_summary(const Signal& cgm, const Window& window,
                                const MetricsConfig& config) {
    check_thresholds(config.thresholds);
    const SortedSeries s = sorted_series(cgm);
    const auto [first, last] = s.range(window);
    if (first == last) {
        throw NoData("no samples in window");
    }
    return summary_over(s, first, last, window, config);
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) {
        return kNan;
    }
    if (sorted.size() == 1) {
        return sorted.front();
    }
    const double h = (double(sorted.size()) - 1.0) * p / 100.0;
    const std::size_t lo = std::size_t(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

AgpProfile agp_profile(const Signal& cgm, const Window& window, int bin_minutes) {
    if (bin_minutes <= 0 || 1440 % bin_minutes != 0) {
        throw InvariantViolation("bin_minutes must divide 1440");
    }
    const std::size_t n_bins = std::size_t(1440 / bin_minutes);
    std::vector<std::vector<double>> buckets(n_bins);
    for (std::size_t i = 0; i < cgm.size(); ++i) {
        if (!in_window(window, cgm.times[i].epoch_millis())) {
            continue;
        }
        const std::int64_t minute = seconds_of_local_day(cgm.times[i]) / 60;
        buckets[std::size_t(minute) / std::size_t(bin_minutes)].push_back(cgm.numbers[i]);
    }

    AgpProfile profile;
    profile.bin_minutes = bin_minutes;
    profile.counts.resize(n_bins, 0);
    profile.p5.assign(n_bins, kNan);
    profile.p25.assign(n_bins, kNan);
    profile.p50.assign(n_bins, kNan);
    profile.p75.assign(n_bins, kNan);
    profile.p95.assign(n_bins, kNan);

    std::size_t total = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        auto& bucket = buckets[b];
        profile.counts[b] = bucket.size();
        total += bucket.size();
        if (bucket.empty()) {
            continue;
        }
        std::sort(bucket.begin(), bucket.end());
        profile.p5[b] = percentile_sorted(bucket, 5);
        profile.p25[b] = percentile_sorted(bucket, 25);
        profile.p50[b] = percentile_sorted(bucket, 50);
        profile.p75[b] = percentile_sorted(bucket, 75);
        profile.p95[b] = percentile_sorted(bucket, 95);
    }
    if (total == 0) {
        throw NoData("no samples in window");
    }
    return profile;
}

std::vector<GlycemicReport> outcomes_over_time(const SubjectRecord& record,
                                               const WindowSpec& spec,
                                               const MetricsConfig& config) {
    const Signal& cgm = require_cgm(record);
    check_thresholds(config.thresholds);
    const SortedSeries s = sorted_series(cgm);

    std::vector<GlycemicReport> out;
    for (const Window& w : slice_windows(record, spec)) {
        const auto [first, last] = s.range(w);
        if (first == last) {
            GlycemicReport placeholder;
            placeholder.window = w;
            placeholder.n_samples = 0;
            placeholder.wear_time_pct = 0.0;
            placeholder.mean = placeholder.sd = placeholder.cv_pct = placeholder.gmi_pct = kNan;
            placeholder.tir_pct = placeholder.tbr_low_pct = placeholder.tbr_very_low_pct = kNan;
            placeholder.tar_high_pct = placeholder.tar_very_high_pct = kNan;
            out.push_back(placeholder);
        } else {
            out.push_back(summary_over(s, first, last, w, config));
        }
    }
    return out;
}

namespace {

struct MetricAccess {
    const char* name;
    double GlycemicReport::*field;
};

constexpr MetricAccess kMetricFields[] = {
    {"wear_time_pct", &GlycemicReport::wear_time_pct},
    {"mean", &GlycemicReport::mean},
    {"sd", &GlycemicReport::sd},
    {"cv_pct", &GlycemicReport::cv_pct},
    {"gmi_pct", &GlycemicReport::gmi_pct},
    {"tir_pct", &GlycemicReport::tir_pct},
    {"tbr_low_pct", &GlycemicReport::tbr_low_pct},
    {"tbr_very_low_pct", &GlycemicReport::tbr_very_low_pct},
    {"tar_high_pct", &GlycemicReport::tar_high_pct},
    {"tar_very_high_pct", &GlycemicReport::tar_very_high_pct},
};

} // namespace

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& m : kMetricFields) {
            out.emplace_back(m.name);
        }
        return out;
    }();
    return names;
}

std::string canonical_metric_name(std::string_view name) {
    static const std::map<std::string_view, std::string_view> aliases = {
        {"tir", "tir_pct"},   {"tbr", "tbr_low_pct"}, {"tar", "tar_high_pct"},
        {"cv", "cv_pct"},     {"gmi", "gmi_pct"},     {"wear", "wear_time_pct"},
        {"tbr2", "tbr_very_low_pct"}, {"tar2", "tar_very_high_pct"},
    };
    if (auto it = aliases.find(name); it != aliases.end()) {
        return std::string(it->second);
    }
    for (const auto& m : kMetricFields) {
        if (name == m.name) {
            return std::string(name);
        }
    }
    throw UnknownMetric("unknown metric '" + std::string(name) + "'");
}

double metric_value(const GlycemicReport& report, std::string_view canonical_name) {
    for (const auto& m : kMetricFields) {
        if (canonical_name == m.name) {
            return report.*(m.field);
        }
    }
    throw UnknownMetric("unknown metric '" + std::string(canonical_name) + "'");
}

std::map<std::string, AggregateStat> cohort_aggregate(const std::vector<GlycemicReport>& reports) {
    if (reports.empty()) {
        throw EmptyCohort("cohort aggregation needs at least one report");
    }
    std::map<std::string, AggregateStat> out;
    for (const auto& metric : kMetricFields) {
        std::vector<double> values;
        values.reserve(reports.size());
        for (const auto& r : reports) {
            const double v = r.*(metric.field);
            if (!std::isnan(v)) {
                values.push_back(v);
            }
        }
        AggregateStat stat;
        stat.n = values.size();
        if (!values.empty()) {
            std::sort(values.begin(), values.end()); // reproducible reduction
            double sum = 0.0;
            for (double v : values) {
                sum += v;
            }
            stat.mean = sum / double(values.size());
            stat.median = percentile_sorted(values, 50);
            stat.q1 = percentile_sorted(values, 25);
            stat.q3 = percentile_sorted(values, 75);
        } else {
            stat.mean = stat.median = stat.q1 = stat.q3 = kNan;
        }
        out.emplace(metric.name, stat);
    }
    return out;
}

Window full_span(const Signal& cgm) {
    if (cgm.times.empty()) {
        throw EmptySignal("signal has no samples");
    }
    auto lt = [](const TimedInstant& a, const TimedInstant& b) {
        return a.epoch_millis() < b.epoch_millis();
    };
    const auto lo = *std::min_element(cgm.times.begin(), cgm.times.end(), lt);
    const auto hi = *std::max_element(cgm.times.begin(), cgm.times.end(), lt);
    return {lo, advance_millis(hi, 1), false};
}

namespace {

std::string cell(double v) {
    return std::isnan(v) ? std::string() : format_number(v);
}

} // namespace

std::string reports_csv_header() {
    return "subject,window_start,window_end,partial,n_samples,wear_time_pct,mean,sd,cv_pct,"
           "gmi_pct,tir_pct,tbr_low_pct,tbr_very_low_pct,tar_high_pct,tar_very_high_pct\n";
}

std::string report_csv_row(std::string_view subject, const GlycemicReport& r) {
    std::string out;
    out += csv_quote(subject);
    out += ',';
    out += format_timestamp(r.window.start);
    out += ',';
    out += format_timestamp(r.window.end);
    out += ',';
    out += r.window.partial ? "1" : "0";
    out += ',';
    out += std::to_string(r.n_samples);
    for (double v : {r.wear_time_pct, r.mean, r.sd, r.cv_pct, r.gmi_pct, r.tir_pct,
                     r.tbr_low_pct, r.tbr_very_low_pct, r.tar_high_pct, r.tar_very_high_pct}) {
        out += ',';
        out += cell(v);
    }
    out += '\n';
    return out;
}

std::string reports_to_csv(std::string_view subject, const std::vector<GlycemicReport>& reports) {
    std::string out = reports_csv_header();
    for (const auto& r : reports) {
        out += report_csv_row(subject, r);
    }
    return out;
}

std::string agp_to_csv(const AgpProfile& profile) {
    std::string out = "bin_start,count,p5,p25,p50,p75,p95\n";
    char buf[16];
    for (std::size_t b = 0; b < profile.bins(); ++b) {
        const int minutes = int(b) * profile.bin_minutes;
        std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
        out += buf;
        out += ',';
        out += std::to_string(profile.counts[b]);
        for (const auto* series :
             {&profile.p5, &profile.p25, &profile.p50, &profile.p75, &profile.p95}) {
            out += ',';
            out += cell((*series)[b]);
        }
        out += '\n';
    }
    return out;
}

} // namespace diax
