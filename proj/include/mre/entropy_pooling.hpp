#pragma once

#include "mre/core_model.hpp"

namespace mre {

struct PoolingConfig {
    double tol = 1e-9;         // on the max-norm of the dual gradient (= view residual)
    int max_iter = 200;
    double theta_cap = 1e3;    // |theta| beyond this is read as an infeasible target
};

struct PoolingResult {
    Vector probs_updated;
    Vector theta_hat;
    double ens_value = 1.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// zeta evaluated at every scenario, J x k. Throws ValidationError on non-finite values.
Matrix feature_matrix(const Matrix& scenarios, const FeatureMap& map);

/// p_j exp(theta' zeta_j), normalized.
Vector tilt_probabilities(const Vector& p, const Matrix& features, const Vector& theta);

/// ln sum_j p_j exp(theta' zeta_j) - theta' eta.
double dual_objective(const Vector& theta, const WeightedScenarios& ws, const ExpectationViews& views);
Vector dual_gradient(const Vector& theta, const WeightedScenarios& ws, const ExpectationViews& views);
Matrix dual_hessian(const Vector& theta, const WeightedScenarios& ws, const ExpectationViews& views);

/// Reweights the scenarios so that E[zeta] = targets, minimizing relative entropy to ws.
///
/// Throws InfeasibleError when the multipliers run past theta_cap (targets on or
/// outside the hull of the features) and ConvergenceError after max_iter.
PoolingResult entropy_pool(const WeightedScenarios& ws, const ExpectationViews& views, const PoolingConfig& config = {});

/// Same, on a precomputed J x k feature matrix.
PoolingResult entropy_pool(const Vector& p, const Matrix& features, const Vector& targets,
                           const PoolingConfig& config = {});

}  // namespace mre
