#pragma once

#include <cstdint>

#include "diax/model.hpp"

namespace diax {

struct SyntheticProfile {
    double basal_u_per_h = 1.0;
    int meals_per_day = 3;
    double cgm_mean = 140.0;
    double cgm_amplitude = 40.0;
};

/// Deterministic desk-scale subject: a cgm sinusoid with seeded noise
/// clamped to [40, 400] mg/dL, a piecewise-constant basal_rate, and bolus +
/// carbs pairs at meal times. The same (seed, days, step, profile) always
/// yields a byte-identical canonical file. step_minutes must be 1, 5, or
/// 15; all profile parameters must be positive. Throws BadProfile.
SubjectRecord generate_synthetic(std::uint64_t seed, int days, int step_minutes,
                                 const SyntheticProfile& profile = {});

} // namespace diax
