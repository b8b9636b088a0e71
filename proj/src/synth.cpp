#include "diax/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "diax/error.hpp"

namespace diax {

namespace {

// Raw engine bits only: std::uniform_real_distribution is not pinned by the
// standard, and generated fixtures must match across toolchains.
class SeededDraws {
public:
    explicit SeededDraws(std::uint64_t seed) : engine_(seed) {}

    double unit() { return double(engine_() >> 11) * 0x1.0p-53; }
    double between(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 engine_;
};

double round_to(double v, double step) {
    return std::round(v / step) * step;
}

SignalMetadata meta(std::string unit, std::string description, const char* device = nullptr) {
    SignalMetadata m;
    m.unit = std::move(unit);
    m.description = std::move(description);
    if (device != nullptr) {
        m.device = device;
    }
    return m;
}

} // namespace

SubjectRecord generate_synthetic(std::uint64_t seed, int days, int step_minutes,
                                 const SyntheticProfile& profile) {
    if (days < 1) {
        throw BadProfile("days must be >= 1");
    }
    if (step_minutes != 1 && step_minutes != 5 && step_minutes != 15) {
        throw BadProfile("step_minutes must be 1, 5, or 15");
    }
    if (profile.basal_u_per_h <= 0 || profile.meals_per_day <= 0 || profile.cgm_mean <= 0 ||
        profile.cgm_amplitude <= 0) {
        throw BadProfile("profile parameters must be positive");
    }

    SeededDraws draws(seed);
    const TimedInstant start = make_instant(2021, 3, 1, 0, 0, 0, 0, true);

    SubjectRecord r;
    r.unique_id = "Synth-" + std::to_string(seed);

    // basal: a new rate every six hours
    {
        Signal basal;
        basal.kind = ValueKind::Numeric;
        for (int d = 0; d < days; ++d) {
            for (int segment = 0; segment < 4; ++segment) {
                basal.times.push_back(advance(start, (d * 24 + segment * 6) * 3600LL));
                basal.numbers.push_back(
                    round_to(profile.basal_u_per_h * draws.between(0.6, 1.4), 0.01));
            }
        }
        r.signals.emplace("basal_rate", std::move(basal));
        r.metadata.emplace("basal_rate",
                           meta("U/h", "Basal insulin delivery rate", "synthetic pump"));
    }

    // meals: carbs plus a matching bolus at jittered daytime slots
    {
        Signal bolus, carbs;
        bolus.kind = carbs.kind = ValueKind::Numeric;
        for (int d = 0; d < days; ++d) {
            struct Meal {
                std::int64_t offset_seconds;
                double grams;
                double units;
            };
            std::vector<Meal> meals;
            meals.reserve(std::size_t(profile.meals_per_day));
            for (int k = 0; k < profile.meals_per_day; ++k) {
                const double slot_minutes = 1440.0 * (k + 1) / (profile.meals_per_day + 1);
                const double jitter = draws.between(-45.0, 45.0);
                const auto minute = std::lround(slot_minutes + jitter);
                const double grams = round_to(draws.between(30.0, 90.0), 1.0);
                const double units = round_to(grams / 10.0 + draws.between(0.0, 1.0), 0.05);
                meals.push_back({d * 86400LL + minute * 60LL, grams, units});
            }
            std::stable_sort(meals.begin(), meals.end(), [](const Meal& a, const Meal& b) {
                return a.offset_seconds < b.offset_seconds;
            });
            for (const Meal& m : meals) {
                const TimedInstant when = advance(start, m.offset_seconds);
                carbs.times.push_back(when);
                carbs.numbers.push_back(m.grams);
                bolus.times.push_back(when);
                bolus.numbers.push_back(m.units);
            }
        }
        r.signals.emplace("bolus", std::move(bolus));
        r.signals.emplace("carbs", std::move(carbs));
        r.metadata.emplace("bolus", meta("U", "Insulin boluses (meal and correction)"));
        r.metadata.emplace("carbs", meta("g", "Announced carbohydrate intake"));
    }

    // cgm: daily sinusoid plus slowly-decaying seeded noise
    {
        Signal cgm;
        cgm.kind = ValueKind::Numeric;
        const int n = days * 1440 / step_minutes;
        cgm.times.reserve(std::size_t(n));
        cgm.numbers.reserve(std::size_t(n));
        double wander = 0.0;
        constexpr double two_pi = 6.283185307179586;
        for (int k = 0; k < n; ++k) {
            const int minutes = k * step_minutes;
            const double phase = two_pi * double(minutes % 1440 - 240) / 1440.0;
            wander = 0.92 * wander + draws.between(-1.0, 1.0) * profile.cgm_amplitude * 0.18;
            double value = profile.cgm_mean + profile.cgm_amplitude * std::sin(phase) + wander;
            value = std::min(400.0, std::max(40.0, value));
            cgm.times.push_back(advance(start, minutes * 60LL));
            cgm.numbers.push_back(round_to(value, 0.1));
        }
        r.signals.emplace("cgm", std::move(cgm));
        r.metadata.emplace("cgm", meta("mg/dL", "CGM values", "synthetic sensor"));
    }

    return r;
}

} // namespace diax
