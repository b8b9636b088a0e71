#include "diax/align.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "diax/csv.hpp"
#include "diax/error.hpp"

namespace diax {

std::size_t Grid::size() const {
    const std::int64_t span = end.epoch_millis() - start.epoch_millis();
    const std::int64_t step = step_seconds * 1000;
    return std::size_t((span + step - 1) / step);
}

TimedInstant Grid::point(std::size_t k) const {
    return advance(start, std::int64_t(k) * step_seconds);
}

std::int64_t Grid::coverage_end_millis() const {
    return start.epoch_millis() + std::int64_t(size()) * step_seconds * 1000;
}

Grid make_grid(const TimedInstant& start, const TimedInstant& end, std::int64_t step_seconds) {
    if (step_seconds <= 0) {
        throw BadRange("grid step must be positive");
    }
    if (start.epoch_millis() >= end.epoch_millis()) {
        throw BadRange("grid start must precede its end");
    }
    return {start, end, step_seconds};
}

Policy Policy::linear(std::int64_t max_gap_seconds) {
    if (max_gap_seconds <= 0) {
        throw PolicyMismatch("max_gap must be positive");
    }
    return {Kind::Linear, max_gap_seconds};
}

Policy Policy::hold() {
    return {Kind::Hold, std::nullopt};
}

Policy Policy::hold_limited(std::int64_t max_gap_seconds) {
    if (max_gap_seconds <= 0) {
        throw PolicyMismatch("max_gap must be positive");
    }
    return {Kind::Hold, max_gap_seconds};
}

Policy Policy::sum() {
    return {Kind::SumIntoBin, std::nullopt};
}

Policy Policy::integrate_rate() {
    return {Kind::IntegrateRate, std::nullopt};
}

namespace {

struct SortedSamples {
    std::vector<std::int64_t> times_ms;
    std::vector<double> values;
};

SortedSamples sorted_numeric(const Signal& signal) {
    std::vector<std::size_t> order(signal.times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return signal.times[a].epoch_millis() < signal.times[b].epoch_millis();
    });
    SortedSamples out;
    out.times_ms.reserve(order.size());
    out.values.reserve(order.size());
    for (std::size_t i : order) {
        out.times_ms.push_back(signal.times[i].epoch_millis());
        out.values.push_back(signal.numbers[i]);
    }
    return out;
}

std::vector<double> resample_linear(const SortedSamples& s, const Grid& grid,
                                    std::int64_t max_gap_ms) {
    const std::size_t n_points = grid.size();
    std::vector<double> out(n_points, missing_value());
    const std::int64_t start = grid.start.epoch_millis();
    const std::int64_t step = grid.step_seconds * 1000;

    std::size_t hi = 0; // first sample with time > t, advanced monotonically
    for (std::size_t k = 0; k < n_points; ++k) {
        const std::int64_t t = start + std::int64_t(k) * step;
        while (hi < s.times_ms.size() && s.times_ms[hi] <= t) {
            ++hi;
        }
        if (hi > 0 && s.times_ms[hi - 1] == t) {
            out[k] = s.values[hi - 1]; // exact hit, last occurrence wins
            continue;
        }
        if (hi == 0 || hi == s.times_ms.size()) {
            continue; // before the first or after the last sample
        }
        const std::int64_t t_prev = s.times_ms[hi - 1];
        const std::int64_t t_next = s.times_ms[hi];
        if (t_next - t_prev > max_gap_ms) {
            continue;
        }
        const double w = double(t - t_prev) / double(t_next - t_prev);
        out[k] = s.values[hi - 1] + w * (s.values[hi] - s.values[hi - 1]);
    }
    return out;
}

std::vector<double> resample_hold(const SortedSamples& s, const Grid& grid,
                                  std::optional<std::int64_t> max_gap_ms) {
    const std::size_t n_points = grid.size();
    std::vector<double> out(n_points, missing_value());
    const std::int64_t start = grid.start.epoch_millis();
    const std::int64_t step = grid.step_seconds * 1000;

    std::size_t hi = 0;
    for (std::size_t k = 0; k < n_points; ++k) {
        const std::int64_t t = start + std::int64_t(k) * step;
        while (hi < s.times_ms.size() && s.times_ms[hi] <= t) {
            ++hi;
        }
        if (hi == 0) {
            continue; // nothing recorded yet
        }
        if (max_gap_ms && t - s.times_ms[hi - 1] > *max_gap_ms) {
            continue;
        }
        out[k] = s.values[hi - 1];
    }
    return out;
}

std::vector<double> resample_sum(const SortedSamples& s, const Grid& grid) {
    std::vector<double> out(grid.size(), 0.0);
    const std::int64_t start = grid.start.epoch_millis();
    const std::int64_t step = grid.step_seconds * 1000;
    const std::int64_t cover_end = grid.coverage_end_millis();
    for (std::size_t i = 0; i < s.times_ms.size(); ++i) {
        const std::int64_t t = s.times_ms[i];
        if (t < start || t >= cover_end) {
            continue;
        }
        out[std::size_t((t - start) / step)] += s.values[i];
    }
    return out;
}

} // namespace

std::vector<double> resample_signal(const Signal& signal, const Grid& grid,
                                    const Policy& policy) {
    if (signal.kind == ValueKind::Categorical) {
        throw PolicyMismatch("categorical signals are attached as events, not resampled");
    }
    if (policy.kind == Policy::Kind::IntegrateRate) {
        return integrate_basal(signal, grid);
    }
    const SortedSamples s = sorted_numeric(signal);
    switch (policy.kind) {
    case Policy::Kind::Linear:
        if (!policy.max_gap_seconds) {
            throw PolicyMismatch("linear policy needs max_gap_seconds");
        }
        return resample_linear(s, grid, *policy.max_gap_seconds * 1000);
    case Policy::Kind::Hold: {
        std::optional<std::int64_t> gap_ms;
        if (policy.max_gap_seconds) {
            gap_ms = *policy.max_gap_seconds * 1000;
        }
        return resample_hold(s, grid, gap_ms);
    }
    case Policy::Kind::SumIntoBin:
        return resample_sum(s, grid);
    default:
        throw PolicyMismatch("unhandled policy");
    }
}

std::vector<double> integrate_basal(const Signal& basal_rate, const Grid& grid) {
    if (basal_rate.kind == ValueKind::Categorical) {
        throw PolicyMismatch("basal_rate must be numeric");
    }
    for (double v : basal_rate.numbers) {
        if (v < 0.0) {
            throw NegativeRate("basal rates must be non-negative");
        }
    }
    const SortedSamples s = sorted_numeric(basal_rate);

    std::vector<double> out(grid.size(), 0.0);
    const std::int64_t start = grid.start.epoch_millis();
    const std::int64_t step = grid.step_seconds * 1000;
    const std::int64_t cover_end = grid.coverage_end_millis();

    for (std::size_t i = 0; i < s.times_ms.size(); ++i) {
        const std::int64_t seg_lo = std::max(s.times_ms[i], start);
        const std::int64_t seg_hi =
            i + 1 < s.times_ms.size() ? std::min(s.times_ms[i + 1], cover_end) : cover_end;
        if (seg_lo >= seg_hi) {
            continue;
        }
        const double rate = s.values[i];
        std::size_t bin = std::size_t((seg_lo - start) / step);
        std::int64_t bin_start = start + std::int64_t(bin) * step;
        while (bin_start < seg_hi && bin < out.size()) {
            const std::int64_t lo = std::max(seg_lo, bin_start);
            const std::int64_t hi = std::min(seg_hi, bin_start + step);
            if (hi > lo) {
                out[bin] += rate * double(hi - lo) / 3.6e6;
            }
            ++bin;
            bin_start += step;
        }
    }
    return out;
}

Policy default_policy(std::string_view key) {
    if (key == "basal_rate") {
        return Policy::integrate_rate();
    }
    if (key == "bolus" || key == "basal_inj" || key == "carbs" || key == "steps") {
        return Policy::sum();
    }
    if (key == "hba1c" || key == "height" || key == "weight") {
        return Policy::hold();
    }
    return Policy::linear(30 * 60); // cgm, smbg, heart_rate, extensions
}

namespace {

void fill_edges_nearest(std::vector<double>& column) {
    const auto first =
        std::find_if(column.begin(), column.end(), [](double v) { return !is_missing(v); });
    if (first == column.end()) {
        return; // nothing to extend from
    }
    std::fill(column.begin(), first, *first);
    const auto last =
        std::find_if(column.rbegin(), column.rend(), [](double v) { return !is_missing(v); });
    std::fill(column.rbegin(), last, *last);
}

} // namespace

AlignedFrame align_subject(const SubjectRecord& record, const Grid& grid,
                           const AlignOptions& options) {
    std::vector<std::string> keys = options.keys;
    if (keys.empty()) {
        for (const auto& kv : record.signals) {
            keys.push_back(kv.first);
        }
    }

    AlignedFrame frame;
    frame.grid = grid;
    for (const auto& key : keys) {
        const Signal* signal = record.find_signal(key);
        if (signal == nullptr) {
            if (options.strict) {
                throw UnknownKey("no signal '" + key + "' in record " + record.unique_id);
            }
            continue;
        }

        const auto override_it = options.policies.find(key);
        if (signal->kind == ValueKind::Categorical) {
            if (override_it != options.policies.end()) {
                throw PolicyMismatch("signal '" + key + "' is categorical and cannot take a policy");
            }
            frame.events.emplace(key, *signal);
            continue;
        }

        Policy policy =
            override_it != options.policies.end() ? override_it->second : default_policy(key);
        bool edge_fill = false;
        if (options.preset == AlignPreset::Replay && override_it == options.policies.end()) {
            if (policy.kind == Policy::Kind::Linear || policy.kind == Policy::Kind::Hold) {
                // interpolate across any gap, then pin the edges
                policy = Policy::linear(kUnboundedGapSeconds);
                edge_fill = true;
            }
        }

        std::vector<double> column = resample_signal(*signal, grid, policy);
        if (edge_fill) {
            fill_edges_nearest(column);
        }
        frame.columns.emplace(key, std::move(column));
    }
    return frame;
}

std::string frame_to_csv(const AlignedFrame& frame) {
    std::string out = "time";
    for (const auto& kv : frame.columns) {
        out += ',';
        out += csv_quote(kv.first);
    }
    out += '\n';

    const std::size_t n = frame.grid.size();
    for (std::size_t k = 0; k < n; ++k) {
        out += format_timestamp(frame.grid.point(k));
        for (const auto& kv : frame.columns) {
            out += ',';
            const double v = kv.second[k];
            if (!is_missing(v)) {
                out += format_number(v);
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace diax
