#pragma once

#include "mre/core_model.hpp"
#include "mre/entropy_pooling.hpp"
#include "mre/hmc.hpp"

#include <optional>

namespace mre {

struct IterativeConfig {
    int n_scenarios = 10000;  // scenarios drawn per outer step
    double delta = 0.01;      // stop once ens > 1 - delta
    int max_outer = 10;
    HmcConfig hmc;            // n_samples is replaced by n_scenarios; step t uses seed hmc.seed + t
    PoolingConfig pool;
    /// Halve the multiplier increment (at most max_halvings times) while the
    /// updated log-numerator is not concave at the pooled mean. Noisy
    /// quadratic multipliers can otherwise produce an improper numerator.
    bool damp_improper = true;
    int max_halvings = 20;
    /// When set, trace errors are measured against these moments; otherwise
    /// against the unweighted moments of the step's own sample.
    std::optional<NormalParams> reference;

    void validate() const;
};

struct IterativeResult {
    WeightedScenarios scenarios;  // pooled scenarios of the last step
    Vector theta_info_hat;        // accumulated multipliers
    TiltedDensity final_numerator;
    IterationTrace trace;
    bool converged = false;
};

/// ln g(x) + theta' zeta(x), with the matching gradient.
TiltedDensity update_numerator(const LogDensity& base, const Vector& theta_hat, const ExpectationViews& views);

/// Folds a tilt into a plain log-numerator so further tilts compose with it.
LogDensity flatten(const TiltedDensity& td);

/// Alternates sampling from the current numerator with entropy pooling,
/// accumulating the multipliers until the pooled probabilities stay close to
/// uniform. Hitting max_outer returns converged = false rather than throwing.
IterativeResult run(const LogDensity& base, const ExpectationViews& views, const IterativeConfig& cfg);

/// ens(p_bar, p_uniform) > 1 - delta.
bool converged(const Vector& p_bar, const Vector& p_uniform, double delta);

}  // namespace mre
