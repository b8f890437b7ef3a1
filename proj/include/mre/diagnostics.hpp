#pragma once

#include "mre/core_model.hpp"

#include <utility>

namespace mre {

/// sum_j p_bar_j ln(p_bar_j / p_j), with 0 ln 0 = 0.
/// Throws ValidationError on length mismatch or any p_j <= 0.
double relative_entropy_discrete(const Vector& p_bar, const Vector& p);

/// Effective number of scenarios, exp(-relative_entropy_discrete(p_bar, p)), in (0, 1].
double ens(const Vector& p_bar, const Vector& p);

/// Closed-form KL divergence KL(n1 || n0) between two normals.
double relative_entropy_normal(const NormalParams& n1, const NormalParams& n0);

/// sum_j p_j zeta(x_j) - targets.
Vector view_residual(const WeightedScenarios& ws, const ExpectationViews& views);

/// Probability-weighted mean and covariance (weights sum to one, no bias correction).
std::pair<Vector, Matrix> weighted_moments(const WeightedScenarios& ws);

/// Rewrites moment views as expectation views on
///   zeta(x) = (gamma_mu x, gamma_sigma x, upper(gamma_sigma x x' gamma_sigma'))
/// with E[gamma_sigma X] pinned to gamma_sigma * pinned_mean. Rows of the
/// pinned block that are linear combinations of gamma_mu rows are dropped
/// (their value is already fixed); a pinned value that contradicts mu_info is
/// rejected with ValidationError.
ExpectationViews expand_moment_views(const MomentViews& mv, const Vector& pinned_mean);

/// Compares the analytic Jacobian of `map` with central differences at `x`.
/// Returns the largest entrywise error scaled by max(1, |entry|).
double jacobian_fd_error(const FeatureMap& map, const Vector& x, double step = 1e-6);

}  // namespace mre
