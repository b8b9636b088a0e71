#include "diax/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "diax/error.hpp"

namespace diax {

namespace {

constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 24;
constexpr int kMarginBottom = 44;

const char* kDefaultPalette[] = {"#1f5fa8", "#b3541e", "#2e7d32",
                                 "#8e24aa", "#00838f", "#c62828"};

// Two fixed decimals everywhere so output is byte-stable.
std::string fixed2(double v) {
    if (v > -0.005 && v < 0.0) {
        v = 0.0;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Canvas {
    std::string body;
    int width;
    int height;

    double plot_left() const { return kMarginLeft; }
    double plot_top() const { return kMarginTop; }
    double plot_width() const { return double(width - kMarginLeft - kMarginRight); }
    double plot_height() const { return double(height - kMarginTop - kMarginBottom); }

    void line(double x1, double y1, double x2, double y2, const std::string& cls,
              const std::string& stroke, const char* extra = "") {
        body += "<line class=\"" + cls + "\" x1=\"" + fixed2(x1) + "\" y1=\"" + fixed2(y1) +
                "\" x2=\"" + fixed2(x2) + "\" y2=\"" + fixed2(y2) + "\" stroke=\"" + stroke +
                "\"" + extra + "/>\n";
    }

    void text(double x, double y, const std::string& cls, const std::string& anchor,
              const std::string& content) {
        body += "<text class=\"" + cls + "\" x=\"" + fixed2(x) + "\" y=\"" + fixed2(y) +
                "\" text-anchor=\"" + anchor + "\">" + content + "</text>\n";
    }

    std::string finish() const {
        std::string out;
        out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
               "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
               std::to_string(width) + " " + std::to_string(height) +
               "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        out += "<rect class=\"bg\" x=\"0\" y=\"0\" width=\"" + std::to_string(width) +
               "\" height=\"" + std::to_string(height) + "\" fill=\"#ffffff\"/>\n";
        out += body;
        out += "</svg>\n";
        return out;
    }
};

template <typename Present>
std::vector<std::pair<std::size_t, std::size_t>> runs(std::size_t n, Present present) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < n) {
        if (!present(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && present(j + 1)) {
            ++j;
        }
        out.emplace_back(i, j);
        i = j + 1;
    }
    return out;
}

} // namespace

std::string render_agp(const std::vector<AgpProfile>& profiles, const PlotStyle& style) {
    if (profiles.empty() || profiles.size() > 2) {
        throw EmptyProfile("render_agp takes one or two profiles");
    }
    for (const auto& p : profiles) {
        if (p.bins() == 0) {
            throw EmptyProfile("profile has no bins");
        }
        std::size_t total = 0;
        for (std::size_t c : p.counts) {
            total += c;
        }
        if (total == 0) {
            throw EmptyProfile("profile has no samples");
        }
    }
    if (profiles.size() == 2 && profiles[0].bin_minutes != profiles[1].bin_minutes) {
        throw BinMismatch("profiles use different bin sizes");
    }

    Canvas canvas{.body = {}, .width = style.width, .height = style.height};
    const double left = canvas.plot_left();
    const double top = canvas.plot_top();
    const double w = canvas.plot_width();
    const double h = canvas.plot_height();

    const auto x_of_minute = [&](double minute) { return left + minute / 1440.0 * w; };
    const auto y_of = [&](double v) {
        const double clamped = std::min(style.y_max, std::max(0.0, v));
        return top + (1.0 - clamped / style.y_max) * h;
    };

    canvas.body += "<g class=\"grid\" stroke-width=\"1\">\n";
    for (int hour = 0; hour <= 24; hour += 3) {
        const double x = x_of_minute(hour * 60.0);
        canvas.line(x, top, x, top + h, "grid", "#dddddd");
    }
    for (double v = 0; v <= style.y_max + 1e-9; v += 50.0) {
        canvas.line(left, y_of(v), left + w, y_of(v), "grid", "#dddddd");
    }
    canvas.body += "</g>\n";

    canvas.body += "<g class=\"axis\" fill=\"#444444\">\n";
    for (int hour = 0; hour <= 24; hour += 3) {
        char label[8];
        std::snprintf(label, sizeof label, "%02d:00", hour);
        canvas.text(x_of_minute(hour * 60.0), top + h + 16, "tick-x", "middle", label);
    }
    for (double v = 0; v <= style.y_max + 1e-9; v += 50.0) {
        canvas.text(left - 8, y_of(v) + 4, "tick-y", "end", fixed2(v));
    }
    canvas.text(left + w / 2, double(style.height) - 8, "axis-label", "middle", "time of day");
    canvas.text(14, top + 12, "axis-label", "start", "mg/dL");
    canvas.body += "</g>\n";

    canvas.body += "<g class=\"target\">\n";
    canvas.line(left, y_of(style.target_lo), left + w, y_of(style.target_lo), "target-line",
                "#2e8b57", " stroke-dasharray=\"5,4\"");
    canvas.line(left, y_of(style.target_hi), left + w, y_of(style.target_hi), "target-line",
                "#2e8b57", " stroke-dasharray=\"5,4\"");
    canvas.body += "</g>\n";

    for (std::size_t s = 0; s < profiles.size(); ++s) {
        const AgpProfile& p = profiles[s];
        const SeriesColors& colors = s == 0 ? style.primary : style.secondary;
        const auto bin_x = [&](std::size_t b) {
            return x_of_minute((double(b) + 0.5) * p.bin_minutes);
        };
        const auto present = [&](std::size_t b) { return p.counts[b] > 0; };
        const auto spans = runs(p.bins(), present);

        const auto band_path = [&](const std::vector<double>& hi_series,
                                   const std::vector<double>& lo_series) {
            std::string d;
            for (const auto& [a, b] : spans) {
                for (std::size_t i = a; i <= b; ++i) {
                    d += (i == a ? "M" : " L");
                    d += fixed2(bin_x(i)) + " " + fixed2(y_of(hi_series[i]));
                }
                for (std::size_t i = b + 1; i-- > a;) {
                    d += " L" + fixed2(bin_x(i)) + " " + fixed2(y_of(lo_series[i]));
                }
                d += " Z ";
            }
            if (!d.empty()) {
                d.pop_back();
            }
            return d;
        };

        canvas.body += "<g class=\"profile\" data-series=\"" + std::to_string(s) + "\">\n";
        canvas.body += "<path class=\"band-outer\" fill=\"" + colors.outer_band +
                       "\" fill-opacity=\"0.6\" stroke=\"none\" d=\"" +
                       band_path(p.p95, p.p5) + "\"/>\n";
        canvas.body += "<path class=\"band-inner\" fill=\"" + colors.inner_band +
                       "\" fill-opacity=\"0.6\" stroke=\"none\" d=\"" +
                       band_path(p.p75, p.p25) + "\"/>\n";

        std::string median;
        for (const auto& [a, b] : spans) {
            for (std::size_t i = a; i <= b; ++i) {
                median += (i == a ? "M" : " L");
                median += fixed2(bin_x(i)) + " " + fixed2(y_of(p.p50[i]));
            }
            median += ' ';
        }
        if (!median.empty()) {
            median.pop_back();
        }
        canvas.body += "<path class=\"median\" fill=\"none\" stroke=\"" + colors.median +
                       "\" stroke-width=\"2\" d=\"" + median + "\"/>\n";
        canvas.body += "</g>\n";
    }

    if (profiles.size() == 2) {
        canvas.body += "<g class=\"legend\">\n";
        for (std::size_t s = 0; s < profiles.size(); ++s) {
            const SeriesColors& colors = s == 0 ? style.primary : style.secondary;
            const std::string label =
                s < style.labels.size() ? style.labels[s] : "period " + std::to_string(s + 1);
            const double y = top + 10 + double(s) * 18;
            canvas.body += "<rect x=\"" + fixed2(left + w - 150) + "\" y=\"" + fixed2(y - 9) +
                           "\" width=\"12\" height=\"12\" fill=\"" + colors.median + "\"/>\n";
            canvas.text(left + w - 132, y + 2, "legend-label", "start", label);
        }
        canvas.body += "</g>\n";
    }

    return canvas.finish();
}

std::string render_outcomes(const std::vector<GlycemicReport>& series,
                            const std::vector<std::string>& metrics, const PlotStyle& style) {
    if (series.empty()) {
        throw EmptySeries("no reports to plot");
    }
    if (metrics.empty()) {
        throw UnknownMetric("no metrics selected");
    }
    std::vector<std::string> selected;
    selected.reserve(metrics.size());
    for (const auto& m : metrics) {
        selected.push_back(canonical_metric_name(m));
    }

    const auto is_percent = [](const std::string& name) {
        return name.size() > 4 && name.compare(name.size() - 4, 4, "_pct") == 0;
    };

    double value_max = 0.0;
    bool any_percent = false;
    bool any_value = false;
    for (const auto& name : selected) {
        if (is_percent(name)) {
            any_percent = true;
            continue;
        }
        any_value = true;
        for (const auto& r : series) {
            const double v = metric_value(r, name);
            if (!std::isnan(v)) {
                value_max = std::max(value_max, v);
            }
        }
    }
    value_max = std::max(1.0, std::ceil(value_max * 1.1));

    Canvas canvas{.body = {}, .width = style.width, .height = style.height};
    const double left = canvas.plot_left();
    const double top = canvas.plot_top();
    const double w = canvas.plot_width();
    const double h = canvas.plot_height();

    const std::int64_t t0 = series.front().window.start.epoch_millis();
    const std::int64_t t1 = series.back().window.start.epoch_millis();
    const auto x_of = [&](std::size_t k) {
        if (t1 == t0) {
            return left + w / 2;
        }
        const double f =
            double(series[k].window.start.epoch_millis() - t0) / double(t1 - t0);
        return left + f * w;
    };
    const auto y_pct = [&](double v) {
        return top + (1.0 - std::min(100.0, std::max(0.0, v)) / 100.0) * h;
    };
    const auto y_val = [&](double v) {
        return top + (1.0 - std::min(value_max, std::max(0.0, v)) / value_max) * h;
    };

    canvas.body += "<g class=\"grid\" stroke-width=\"1\">\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double y = top + h * tick / 5.0;
        canvas.line(left, y, left + w, y, "grid", "#dddddd");
    }
    canvas.body += "</g>\n";

    canvas.body += "<g class=\"axis\" fill=\"#444444\">\n";
    if (any_percent || !any_value) {
        for (int tick = 0; tick <= 5; ++tick) {
            canvas.text(left - 8, top + h * tick / 5.0 + 4, "tick-y", "end",
                        fixed2(100.0 - 20.0 * tick));
        }
        canvas.text(14, top + 12, "axis-label", "start", "%");
    }
    if (any_value) {
        for (int tick = 0; tick <= 5; ++tick) {
            canvas.text(left + w + 8, top + h * tick / 5.0 + 4, "tick-y2", "start",
                        fixed2(value_max * (5 - tick) / 5.0));
        }
    }
    const std::size_t n = series.size();
    const std::size_t tick_idx[3] = {0, n / 2, n - 1};
    for (std::size_t i = 0; i < 3; ++i) {
        if (i > 0 && tick_idx[i] == tick_idx[i - 1]) {
            continue;
        }
        const std::string stamp = format_timestamp(series[tick_idx[i]].window.start);
        canvas.text(x_of(tick_idx[i]), top + h + 16, "tick-x", "middle", stamp.substr(0, 10));
    }
    canvas.body += "</g>\n";

    for (std::size_t m = 0; m < selected.size(); ++m) {
        const std::string& name = selected[m];
        const std::string color =
            !style.palette.empty()
                ? style.palette[m % style.palette.size()]
                : kDefaultPalette[m % (sizeof kDefaultPalette / sizeof *kDefaultPalette)];
        const bool pct = is_percent(name);

        const auto present = [&](std::size_t k) {
            return !std::isnan(metric_value(series[k], name));
        };
        canvas.body += "<g class=\"series\" data-metric=\"" + name + "\">\n";
        for (const auto& [a, b] : runs(series.size(), present)) {
            std::string points;
            for (std::size_t k = a; k <= b; ++k) {
                const double v = metric_value(series[k], name);
                points += fixed2(x_of(k)) + "," + fixed2(pct ? y_pct(v) : y_val(v));
                if (k != b) {
                    points += ' ';
                }
            }
            canvas.body += "<polyline class=\"series-line\" fill=\"none\" stroke=\"" + color +
                           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
        }
        canvas.body += "</g>\n";
    }

    canvas.body += "<g class=\"legend\">\n";
    for (std::size_t m = 0; m < selected.size(); ++m) {
        const std::string color =
            !style.palette.empty()
                ? style.palette[m % style.palette.size()]
                : kDefaultPalette[m % (sizeof kDefaultPalette / sizeof *kDefaultPalette)];
        const std::string label = m < style.labels.size() ? style.labels[m] : selected[m];
        const double y = top + 10 + double(m) * 18;
        canvas.line(left + w - 150, y - 3, left + w - 132, y - 3, "legend-swatch", color,
                    " stroke-width=\"3\"");
        canvas.text(left + w - 126, y, "legend-label", "start", label);
    }
    canvas.body += "</g>\n";

    return canvas.finish();
}

} // namespace diax
