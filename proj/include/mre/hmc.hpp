#pragma once

#include "mre/core_model.hpp"

#include <cstdint>

namespace mre {

struct HmcConfig {
    double step_size = 0.1;
    int n_leapfrog = 20;
    int n_samples = 1000;
    int n_burnin = 1000;
    int thin = 1;
    std::uint64_t seed = 0;
    double target_accept = 0.8;  // only used when adapt is set
    bool adapt = false;          // dual averaging of the step size during burn-in
    double step_jitter = 0.0;    // each trajectory uses step * U(1 - jitter, 1 + jitter)

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

/// u(x) = ln g(x) + theta' zeta(x).
double log_density(const TiltedDensity& td, const Vector& x);

/// grad ln g(x) + J_zeta(x)' theta.
Vector log_density_gradient(const TiltedDensity& td, const Vector& x);

struct LeapfrogState {
    Vector x;
    Vector momentum;
    bool finite = true;  // false when the trajectory left the finite range
};

LeapfrogState leapfrog(const TiltedDensity& td, Vector x, Vector momentum, double step_size, int n_steps);

struct HmcResult {
    WeightedScenarios scenarios;     // n_samples draws, uniform probabilities
    double acceptance_rate = 0.0;    // after burn-in
    double burnin_acceptance = 0.0;
    double step_size = 0.0;          // step used after burn-in
    int divergences = 0;             // non-finite trajectories
};

/// Single chain from x0. Throws TuningError when fewer than 5% of burn-in
/// proposals are accepted.
HmcResult sample(const TiltedDensity& td, const HmcConfig& cfg, const Vector& x0);

/// Starts from td.base().start, or the origin when there is none.
HmcResult sample(const TiltedDensity& td, const HmcConfig& cfg);

/// Autocorrelation-adjusted sample size of one chain (Geyer's initial
/// positive sequence).
double effective_sample_size(const Vector& chain);

}  // namespace mre
