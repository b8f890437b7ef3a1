#pragma once

#include "mre/core_model.hpp"

namespace mre {

/// Closed-form update of a normal base under MomentViews.
struct NormalMreSolution {
    NormalParams updated;
    Vector theta_mu_info;     // multipliers of the gamma_mu X constraints
    Matrix theta_sigma_info;  // k_sigma x k_sigma, multipliers of the second-moment block
    Vector eta_sigma_info;    // gamma_sigma * updated mean
    Vector mu_shift;          // mean after the covariance tilt alone
    int iterations = 0;       // fixed-point evaluations; 0 for the explicit solvers
};

CanonicalNormal normal_to_canonical(const NormalParams& np);

/// Throws ValidationError (via CanonicalNormal) when theta_sigma is not negative definite.
NormalParams canonical_to_normal(const CanonicalNormal& cn);

/// -1/4 theta_mu' inv(theta_sigma) theta_mu - 1/2 ln det(-2 theta_sigma).
double normal_log_partition(const CanonicalNormal& cn);

/// cov * gamma' * inv(gamma cov gamma'); gamma * result = I.
/// Throws ValidationError when gamma cov gamma' is singular.
Matrix sigma_pseudo_inverse(const Matrix& cov, const Matrix& gamma);

/// cov + G (sigma2_info - gamma_sigma cov gamma_sigma') G' with G the pseudo-inverse of gamma_sigma.
/// Throws InfeasibleError if the result is not positive definite.
Matrix updated_covariance(const NormalParams& base, const MomentViews& mv);

/// The mean implied by tilting only the quadratic (covariance) block.
Vector mu_shift(const NormalParams& base, const MomentViews& mv);

Vector updated_mean(const NormalParams& base, const MomentViews& mv);

NormalMreSolution solve_moment_views(const NormalParams& base, const MomentViews& mv);

/// Shortcut valid when gamma_mu cov gamma_sigma' = 0 (ValidationError otherwise):
/// both corrections are computed against the base covariance.
NormalMreSolution solve_uncorrelated(const NormalParams& base, const MomentViews& mv);

struct FixedPointConfig {
    double tol = 1e-10;
    int max_iter = 1000;
    double relaxation = 1.0;  // 1.0 = plain iteration, 0.5 = averaged
};

/// Views on non-central moments:
///   E[gamma_mu X] = eta_mu,  E[gamma_sigma X X' gamma_sigma'] = eta_sigma_sigma.
/// The implied first moments eta_sigma = gamma_sigma * mean are found by
/// iterating eta <- gamma_sigma * mu(eta).
NormalMreSolution solve_noncentral_fixed_point(const NormalParams& base,
                                               const Matrix& gamma_mu,
                                               const Vector& eta_mu,
                                               const Matrix& gamma_sigma,
                                               const Matrix& eta_sigma_sigma,
                                               const FixedPointConfig& config = {});

/// Multipliers of the linear constraints of the family member f^(eta_sigma),
/// i.e. the normal with E[gamma_mu X] = mu_info, E[gamma_sigma X] = eta_sigma and
/// Cov(gamma_sigma X) = sigma2_info. Requires (gamma_mu; gamma_sigma) of full row rank.
struct LinearMultipliers {
    Vector theta_mu;
    Vector theta_sigma;
};
LinearMultipliers linear_multipliers(const NormalParams& base, const MomentViews& mv, const Vector& eta_sigma);

/// The family member f^(eta_sigma) described above.
NormalParams family_member(const NormalParams& base, const MomentViews& mv, const Vector& eta_sigma);

}  // namespace mre
