#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "diax/model.hpp"
#include "diax/timeparse.hpp"

// Shared fixture generators. Everything here is deliberately independent of
// the library internals it is used to check: timestamps are assembled from
// raw fields, expected strings are rendered with snprintf, and record
// construction goes through the public structs only.
namespace testutil {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // inclusive bounds
    int range(int lo, int hi) { return lo + int(eng_() % std::uint64_t(hi - lo + 1)); }
    bool chance(double p) { return uniform() < p; }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

inline bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : d[m - 1];
}

struct TimestampCase {
    std::string text;       // grammar-valid input
    std::string normalized; // canonical rendering of the same instant
    int fallback;           // fallback offset to parse with
    bool aware;
};

inline TimestampCase random_timestamp_case(Rng& rng) {
    const int year = rng.range(1970, 2099);
    const int month = rng.range(1, 12);
    const int day = rng.range(1, days_in_month(year, month));
    const int hour = rng.range(0, 23);
    const int minute = rng.range(0, 59);
    const int second = rng.range(0, 59);
    const int frac_digits = rng.chance(0.3) ? rng.range(1, 3) : 0;
    int frac = 0;
    int millis = 0;
    if (frac_digits > 0) {
        const int limits[] = {0, 9, 99, 999};
        const int scale[] = {0, 100, 10, 1};
        frac = rng.range(0, limits[frac_digits]);
        millis = frac * scale[frac_digits];
    }

    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d%c%02d:%02d:%02d", year, month, day,
                  rng.chance(0.5) ? ' ' : 'T', hour, minute, second);
    std::string text = buf;
    if (frac_digits > 0) {
        std::snprintf(buf, sizeof buf, ".%0*d", frac_digits, frac);
        text += buf;
    }

    TimestampCase c;
    c.fallback = rng.range(-12, 12) * 60 + rng.range(0, 3) * 15;
    if (c.fallback > diax::kMaxOffsetMinutes) {
        c.fallback = diax::kMaxOffsetMinutes;
    }
    c.aware = rng.chance(0.6);
    int offset = 0;
    if (c.aware) {
        const bool zulu = rng.chance(0.25);
        if (rng.chance(0.7)) {
            text += ' ';
        }
        if (zulu) {
            text += 'Z';
        } else {
            offset = (rng.range(0, 1) ? 1 : -1) * (rng.range(0, 14) * 60 + rng.range(0, 59));
            const char sign = offset < 0 ? '-' : '+';
            const int a = offset < 0 ? -offset : offset;
            std::snprintf(buf, sizeof buf, rng.chance(0.5) ? "%c%02d:%02d" : "%c%02d%02d", sign,
                          a / 60, a % 60);
            text += buf;
        }
    }

    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", year, month, day, hour, minute,
                  second);
    c.normalized = buf;
    if (millis != 0) {
        std::snprintf(buf, sizeof buf, ".%03d", millis);
        c.normalized += buf;
    }
    if (c.aware) {
        const char sign = offset < 0 ? '-' : '+';
        const int a = offset < 0 ? -offset : offset;
        std::snprintf(buf, sizeof buf, " %c%02d:%02d", sign, a / 60, a % 60);
        c.normalized += buf;
    }
    c.text = std::move(text);
    return c;
}

inline diax::TimedInstant random_instant(Rng& rng, int fallback, std::int64_t lo_epoch,
                                         std::int64_t hi_epoch) {
    diax::TimedInstant t;
    t.epoch_seconds = lo_epoch + std::int64_t(rng.uniform() * double(hi_epoch - lo_epoch));
    t.millis = rng.chance(0.2) ? rng.range(0, 999) : 0;
    t.zone_aware = rng.chance(0.5);
    t.offset_minutes = t.zone_aware ? rng.range(-12, 12) * 30 : fallback;
    return t;
}

inline std::vector<diax::TimedInstant> sorted_instants(Rng& rng, int fallback, int n) {
    std::vector<diax::TimedInstant> ts;
    ts.reserve(std::size_t(n));
    const std::int64_t base = 1'600'000'000 + std::int64_t(rng.range(0, 100'000));
    for (int i = 0; i < n; ++i) {
        ts.push_back(random_instant(rng, fallback, base, base + 14 * 86'400));
    }
    std::stable_sort(ts.begin(), ts.end(), [](const auto& a, const auto& b) {
        return a.epoch_millis() < b.epoch_millis();
    });
    return ts;
}

inline diax::SignalMetadata metadata_for(const std::string& key, Rng& rng) {
    diax::SignalMetadata m;
    auto reg = diax::key_registry().find(key);
    m.unit = reg != diax::key_registry().end() && !reg->second.unit.empty() ? reg->second.unit
                                                                            : "arbitrary";
    m.description = "series " + key;
    if (rng.chance(0.3)) {
        m.device = "device-" + std::to_string(rng.range(0, 9));
    }
    if (rng.chance(0.2)) {
        m.insulin = "insulin aspart";
    }
    return m;
}

/// A randomized valid SubjectRecord whose naive timestamps resolve against
/// the given fallback; reading its canonical form back with the same
/// fallback must reproduce it exactly.
inline diax::SubjectRecord random_record(Rng& rng, int fallback) {
    diax::SubjectRecord r;
    r.unique_id = "T-" + std::to_string(rng.range(1, 999999));

    auto add_numeric = [&](const std::string& key, int n, double lo, double hi) {
        std::vector<double> vals;
        vals.reserve(std::size_t(n));
        for (int i = 0; i < n; ++i) {
            vals.push_back(rng.uniform(lo, hi));
        }
        r.signals.emplace(key, diax::make_numeric_signal(sorted_instants(rng, fallback, n), vals));
        r.metadata.emplace(key, metadata_for(key, rng));
    };

    add_numeric("cgm", rng.range(1, 40), 40, 400);
    if (rng.chance(0.7)) {
        add_numeric("bolus", rng.range(1, 8), 0.05, 12);
    }
    if (rng.chance(0.6)) {
        add_numeric("basal_rate", rng.range(1, 10), 0, 3);
    }
    if (rng.chance(0.5)) {
        add_numeric("carbs", rng.range(1, 6), 5, 120);
    }
    if (rng.chance(0.3)) {
        add_numeric("smbg", rng.range(1, 4), 40, 400);
    }
    if (rng.chance(0.3)) {
        add_numeric("glp1", rng.range(1, 3), 0.1, 5); // extension key
    }
    if (rng.chance(0.4)) {
        const int n = rng.range(1, 5);
        std::vector<std::string> labels;
        for (int i = 0; i < n; ++i) {
            labels.emplace_back(diax::kCarbCategories[std::size_t(rng.range(0, 4))]);
        }
        r.signals.emplace("carb_category", diax::make_categorical_signal(
                                               sorted_instants(rng, fallback, n), labels));
        diax::SignalMetadata m;
        m.unit = "category";
        m.description = "announced meal type";
        r.metadata.emplace("carb_category", m);
    }
    if (rng.chance(0.2)) {
        // categorical extension key
        const int n = rng.range(1, 3);
        std::vector<std::string> labels;
        for (int i = 0; i < n; ++i) {
            labels.emplace_back("tag" + std::to_string(rng.range(0, 5)));
        }
        r.signals.emplace(
            "session_tag",
            diax::make_categorical_signal(sorted_instants(rng, fallback, n), labels));
        diax::SignalMetadata m;
        m.unit = "label";
        m.description = "free-form session tag";
        m.precision = "categorical";
        r.metadata.emplace("session_tag", m);
    }
    return r;
}

inline int random_fallback(Rng& rng) {
    return rng.range(-11, 11) * 60 + rng.range(0, 1) * 30;
}

} // namespace testutil
