#include <numeric>

#include <doctest.h>

#include "diax/align.hpp"
#include "diax/error.hpp"
#include "diax/synth.hpp"
#include "helpers.hpp"

using namespace diax;

namespace {

TimedInstant at(int hour, int minute = 0) {
    return make_instant(2021, 3, 1, hour, minute, 0, 0, true);
}

Signal numeric(std::vector<TimedInstant> times, std::vector<double> values) {
    return make_numeric_signal(std::move(times), std::move(values));
}

// Independent oracle: integral of the step function over [lo, hi) in ms.
double step_integral_oracle(const Signal& basal, std::int64_t lo_ms, std::int64_t hi_ms) {
    std::vector<std::pair<std::int64_t, double>> pts;
    for (std::size_t i = 0; i < basal.size(); ++i) {
        pts.emplace_back(basal.times[i].epoch_millis(), basal.numbers[i]);
    }
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::int64_t seg_lo = std::max(pts[i].first, lo_ms);
        const std::int64_t seg_hi =
            i + 1 < pts.size() ? std::min(pts[i + 1].first, hi_ms) : hi_ms;
        if (seg_hi > seg_lo) {
            total += pts[i].second * double(seg_hi - seg_lo) / 3.6e6;
        }
    }
    return total;
}

} // namespace

TEST_CASE("grids are half-open") {
    const Grid g = make_grid(at(10), at(11), 15 * 60);
    CHECK(g.size() == 4);
    CHECK(format_timestamp(g.point(0)) == "2021-03-01 10:00:00 +00:00");
    CHECK(format_timestamp(g.point(3)) == "2021-03-01 10:45:00 +00:00");

    CHECK(make_grid(at(0), advance(at(0), 86400), 300).size() == 288);

    // a ragged span still excludes its end point
    CHECK(make_grid(at(10), advance(at(10), 3601), 900).size() == 5);

    CHECK_THROWS_AS(make_grid(at(10), at(10), 300), BadRange);
    CHECK_THROWS_AS(make_grid(at(11), at(10), 300), BadRange);
    CHECK_THROWS_AS(make_grid(at(10), at(11), 0), BadRange);
}

TEST_CASE("hold keeps the last rate until the next entry") {
    const Signal basal = numeric({at(10), at(11)}, {1.0, 0.5});
    const Grid g = make_grid(at(10, 30), advance(at(10, 30), 60), 60);
    const auto col = resample_signal(basal, g, Policy::hold());
    REQUIRE(col.size() == 1);
    CHECK(col[0] == 1.0);

    // missing before the first sample
    const Grid before = make_grid(at(9), at(12), 3600);
    const auto col2 = resample_signal(basal, before, Policy::hold());
    REQUIRE(col2.size() == 3);
    CHECK(is_missing(col2[0]));
    CHECK(col2[1] == 1.0);
    CHECK(col2[2] == 0.5);

    // the gap-limited variant preserves missing data
    const auto limited = resample_signal(basal, make_grid(at(10), at(14), 3600),
                                         Policy::hold_limited(90 * 60));
    REQUIRE(limited.size() == 4);
    CHECK(limited[0] == 1.0);
    CHECK(limited[1] == 0.5);
    CHECK(limited[2] == 0.5);
    CHECK(is_missing(limited[3])); // 13:00 is 2 h past the last sample
}

TEST_CASE("linear interpolation brackets within the gap cap") {
    const Signal cgm = numeric({at(10, 0), at(10, 10)}, {100, 110});
    const Grid g = make_grid(at(10, 5), advance(at(10, 5), 60), 60);
    const auto col = resample_signal(cgm, g, Policy::linear(30 * 60));
    REQUIRE(col.size() == 1);
    CHECK(col[0] == doctest::Approx(105.0));

    // samples an hour apart with a 30 min cap stay missing in between
    const Signal gappy = numeric({at(10), at(11)}, {100, 160});
    const Grid fine = make_grid(at(10), advance(at(11), 1),  5 * 60);
    const auto col2 = resample_signal(gappy, fine, Policy::linear(30 * 60));
    REQUIRE(col2.size() == 13);
    CHECK(col2.front() == 100.0); // exact hits pass through
    CHECK(col2.back() == 160.0);
    for (std::size_t k = 1; k + 1 < col2.size(); ++k) {
        CHECK(is_missing(col2[k]));
    }

    // raising the cap interpolates the same points
    const auto col3 = resample_signal(gappy, fine, Policy::linear(2 * 3600));
    CHECK(col3[6] == doctest::Approx(130.0));
}

TEST_CASE("sum-into-bin owns the left edge") {
    const Signal bolus =
        numeric({at(10, 0), at(10, 14), at(10, 15), at(10, 29)}, {1.0, 2.0, 4.0, 8.0});
    const Grid g = make_grid(at(10), at(10, 30), 15 * 60);
    const auto col = resample_signal(bolus, g, Policy::sum());
    REQUIRE(col.size() == 2);
    CHECK(col[0] == 3.0); // 10:00 and 10:14
    CHECK(col[1] == 12.0); // 10:15 lands in the second bin, not the first
}

TEST_CASE("empty impulse bins are zero, not missing") {
    const Signal bolus = numeric({at(10)}, {2.5});
    const auto col = resample_signal(bolus, make_grid(at(9), at(12), 3600), Policy::sum());
    CHECK(col == std::vector<double>{0.0, 2.5, 0.0});
}

TEST_CASE("basal integration matches the worked example") {
    const Signal basal = numeric({at(10), at(11)}, {1.0, 0.5});
    const Grid g = make_grid(at(10), at(12), 30 * 60);
    const auto bins = integrate_basal(basal, g);
    REQUIRE(bins.size() == 4);
    CHECK(bins[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bins[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bins[2] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(bins[3] == doctest::Approx(0.25).epsilon(1e-12));

    // constant 1 U/h across a day of 5-minute bins
    const Signal flat = numeric({at(0)}, {1.0});
    const Grid day = make_grid(at(0), advance(at(0), 86400), 300);
    const auto bins2 = integrate_basal(flat, day);
    REQUIRE(bins2.size() == 288);
    for (double b : bins2) {
        CHECK(b == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    }
    const double total = std::accumulate(bins2.begin(), bins2.end(), 0.0);
    CHECK(total == doctest::Approx(24.0).epsilon(1e-12));

    // zero-rate convention before the first sample
    const Signal late = numeric({at(11)}, {2.0});
    const auto bins3 = integrate_basal(late, g);
    CHECK(bins3[0] == 0.0);
    CHECK(bins3[1] == 0.0);
    CHECK(bins3[2] == doctest::Approx(1.0));

    // empty signal -> all-zero bins
    Signal empty;
    empty.kind = ValueKind::Numeric;
    CHECK(integrate_basal(empty, g) == std::vector<double>(4, 0.0));

    const Signal negative = numeric({at(10)}, {-0.1});
    CHECK_THROWS_AS(integrate_basal(negative, g), NegativeRate);
}

TEST_CASE("conservation: impulse sums and basal integrals match oracles") {
    testutil::Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t0 = at(0);
        const int n = rng.range(1, 25);

        // dyadic values make double sums exact in any association
        std::vector<TimedInstant> times;
        std::vector<double> values;
        for (int i = 0; i < n; ++i) {
            times.push_back(advance(t0, rng.range(0, 86399)));
            values.push_back(rng.range(1, 80) * 0.25);
        }
        Signal bolus;
        bolus.kind = ValueKind::Numeric;
        bolus.times = times;
        bolus.numbers = values;

        const Grid g = make_grid(t0, advance(t0, 86400), 60 * rng.range(1, 60));
        const auto bins = resample_signal(bolus, g, Policy::sum());
        const double binned = std::accumulate(bins.begin(), bins.end(), 0.0);
        const double direct = std::accumulate(values.begin(), values.end(), 0.0);
        CHECK(binned == direct);

        // basal conservation vs the breakpoint oracle
        std::vector<TimedInstant> btimes;
        std::vector<double> brates;
        for (int i = 0; i < n; ++i) {
            btimes.push_back(advance(t0, rng.range(-3600, 90000)));
            brates.push_back(rng.uniform(0.0, 3.0));
        }
        Signal basal;
        basal.kind = ValueKind::Numeric;
        basal.times = btimes;
        basal.numbers = brates;

        const auto pieces = integrate_basal(basal, g);
        const double total = std::accumulate(pieces.begin(), pieces.end(), 0.0);
        const double oracle =
            step_integral_oracle(basal, g.start.epoch_millis(), g.coverage_end_millis());
        CHECK(std::abs(total - oracle) <= 1e-9);
    }
}

TEST_CASE("linear reproduces exact samples and hold is idempotent") {
    testutil::Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t0 = at(0);
        const int n = rng.range(2, 40);
        std::vector<TimedInstant> times;
        std::vector<double> values;
        for (int i = 0; i < n; ++i) {
            times.push_back(advance(t0, 60 * rng.range(0, 1439)));
            values.push_back(rng.uniform(40, 400));
        }
        std::stable_sort(times.begin(), times.end());
        Signal s;
        s.kind = ValueKind::Numeric;
        s.times = times;
        s.numbers = values;

        const Grid g = make_grid(t0, advance(t0, 86400), 60);
        const auto lin = resample_signal(s, g, Policy::linear(3600));
        for (std::size_t i = 0; i < times.size(); ++i) {
            const std::size_t k =
                std::size_t((times[i].epoch_millis() - t0.epoch_millis()) / 60000);
            // the last sample at a duplicated time wins
            std::size_t last = i;
            while (last + 1 < times.size() &&
                   times[last + 1].epoch_millis() == times[i].epoch_millis()) {
                ++last;
            }
            CHECK(lin[k] == values[last]);
        }

        const auto held = resample_signal(s, g, Policy::hold());
        Signal held_signal;
        held_signal.kind = ValueKind::Numeric;
        for (std::size_t k = 0; k < held.size(); ++k) {
            if (!is_missing(held[k])) {
                held_signal.times.push_back(g.point(k));
                held_signal.numbers.push_back(held[k]);
            }
        }
        const auto held_again = resample_signal(held_signal, g, Policy::hold());
        for (std::size_t k = 0; k < held.size(); ++k) {
            if (is_missing(held[k])) {
                CHECK(is_missing(held_again[k]));
            } else {
                CHECK(held_again[k] == held[k]);
            }
        }
    }
}

TEST_CASE("align_subject applies defaults, presets, and policy overrides") {
    SubjectRecord r = generate_synthetic(7, 1, 5);

    const Grid g = make_grid(at(0), advance(at(0), 86400), 300);
    AlignOptions keys_only;
    keys_only.keys = {"cgm", "bolus"};
    const AlignedFrame frame = align_subject(r, g, keys_only);
    CHECK(frame.columns.size() == 2);
    CHECK(frame.columns.at("cgm").size() == g.size());
    CHECK(frame.columns.at("bolus").size() == g.size());

    AlignOptions strict;
    strict.keys = {"cgm", "spo2"};
    CHECK_THROWS_AS(align_subject(r, g, strict), UnknownKey);
    strict.strict = false;
    CHECK(align_subject(r, g, strict).columns.size() == 1);

    // carve a 60-minute hole out of the cgm trace
    Signal& cgm = r.signals.at("cgm");
    Signal holed;
    holed.kind = ValueKind::Numeric;
    const auto hole_lo = at(12).epoch_millis();
    const auto hole_hi = at(13).epoch_millis();
    for (std::size_t i = 0; i < cgm.size(); ++i) {
        const auto t = cgm.times[i].epoch_millis();
        if (t > hole_lo && t < hole_hi) {
            continue;
        }
        holed.times.push_back(cgm.times[i]);
        holed.numbers.push_back(cgm.numbers[i]);
    }
    cgm = holed;

    AlignOptions replay;
    replay.preset = AlignPreset::Replay;
    const auto replay_frame = align_subject(r, make_grid(at(0), advance(at(0), 86400), 300),
                                            replay);
    for (double v : replay_frame.columns.at("cgm")) {
        CHECK_FALSE(is_missing(v));
    }

    AlignOptions advisor;
    advisor.preset = AlignPreset::Advisor;
    const Grid coarse = make_grid(at(0), advance(at(0), 86400), 900);
    const auto advisor_frame = align_subject(r, coarse, advisor);
    const auto& col = advisor_frame.columns.at("cgm");
    int missing_count = 0;
    for (std::size_t k = 0; k < col.size(); ++k) {
        const auto t = coarse.point(k).epoch_millis();
        const bool interior = t > hole_lo && t < hole_hi;
        CHECK(is_missing(col[k]) == interior);
        missing_count += is_missing(col[k]);
    }
    CHECK(missing_count == 3); // 12:15, 12:30, 12:45

    // categorical signals ride along as events and reject policies
    std::vector<TimedInstant> when{at(8)};
    r.signals.emplace("carb_category",
                      make_categorical_signal(when, std::vector<std::string>{"HT"}));
    SignalMetadata m;
    m.unit = "category";
    m.description = "meal type";
    r.metadata.emplace("carb_category", m);
    const auto with_events = align_subject(r, coarse, advisor);
    CHECK(with_events.events.count("carb_category") == 1);
    CHECK(with_events.columns.count("carb_category") == 0);

    AlignOptions bad;
    bad.policies.emplace("carb_category", Policy::sum());
    CHECK_THROWS_AS(align_subject(r, coarse, bad), PolicyMismatch);
}

TEST_CASE("frames render as CSV with empty missing cells") {
    SubjectRecord r;
    r.unique_id = "x";
    r.signals.emplace("cgm", numeric({at(10), at(10, 10)}, {100, 110.5}));
    r.signals.emplace("bolus", numeric({at(10, 2)}, {1.25}));
    SignalMetadata m;
    m.unit = "mg/dL";
    m.description = "d";
    r.metadata.emplace("cgm", m);
    m.unit = "U";
    r.metadata.emplace("bolus", m);

    const Grid g = make_grid(at(10), at(10, 15), 300);
    const auto frame = align_subject(r, g, {});
    const std::string csv = frame_to_csv(frame);
    CHECK(csv ==
          "time,bolus,cgm\n"
          "2021-03-01 10:00:00 +00:00,1.25,100\n"
          "2021-03-01 10:05:00 +00:00,0,105.25\n"
          "2021-03-01 10:10:00 +00:00,0,110.5\n");
}
