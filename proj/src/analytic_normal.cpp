#include "mre/analytic_normal.hpp"

#include "mre/error.hpp"
#include "mre/linalg.hpp"

#include <Eigen/QR>

#include <cmath>
#include <string>

namespace mre {

namespace {

Eigen::LLT<Matrix> factor_or_throw(const Matrix& a, const std::string& what) {
    auto llt = linalg::cholesky(a);
    if (!llt) throw ValidationError(what);
    return *llt;
}

// gamma cov gamma' and the right pseudo-inverse cov gamma' inv(gamma cov gamma').
struct ProjectedBlock {
    Matrix projected;
    Eigen::LLT<Matrix> llt;
    Matrix pinv;
};

ProjectedBlock project(const Matrix& cov, const Matrix& gamma, const char* name) {
    ProjectedBlock b;
    b.projected = linalg::symmetrize(gamma * cov * gamma.transpose());
    b.llt = factor_or_throw(b.projected, std::string(name) + " * cov * " + name + "' is singular (rank-deficient " + name + ")");
    b.pinv = b.llt.solve(gamma * cov).transpose();
    return b;
}

Matrix covariance_update(const Matrix& cov, const ProjectedBlock& sigma_block, const Matrix& sigma2) {
    Matrix updated = cov + sigma_block.pinv * (sigma2 - sigma_block.projected) * sigma_block.pinv.transpose();
    updated = linalg::symmetrize(updated);
    if (!linalg::is_positive_definite(updated)) {
        throw InfeasibleError("updated covariance not positive definite (views incompatible with a normal)");
    }
    return updated;
}

Vector shift_mean(const Vector& mean, const Matrix& gamma_sigma, const ProjectedBlock& sigma_block, const Matrix& sigma2) {
    const Vector gm = gamma_sigma * mean;
    const Vector target = sigma2 * sigma_block.llt.solve(gm);
    return mean + sigma_block.pinv * (target - gm);
}

struct MeanCorrection {
    Vector mean;
    Vector theta_mu;
};

// mean + cov_bar gamma' inv(gamma cov_bar gamma') (info - gamma mean)
MeanCorrection correct_mean(const Vector& start, const Matrix& cov_bar, const Matrix& gamma_mu, const Vector& info) {
    if (gamma_mu.rows() == 0) return {start, Vector(0)};
    const auto llt = factor_or_throw(linalg::symmetrize(gamma_mu * cov_bar * gamma_mu.transpose()),
                                     "gamma_mu * cov * gamma_mu' is singular (rank-deficient gamma_mu)");
    const Vector theta = llt.solve(info - gamma_mu * start);
    return {start + cov_bar * gamma_mu.transpose() * theta, theta};
}

Matrix quadratic_multipliers(const ProjectedBlock& sigma_block, const Matrix& sigma2) {
    const Index k = sigma2.rows();
    if (k == 0) return Matrix(0, 0);
    const auto s_llt = factor_or_throw(sigma2, "sigma2_info not positive definite");
    const Matrix eye = Matrix::Identity(k, k);
    return linalg::symmetrize(0.5 * (sigma_block.llt.solve(eye) - s_llt.solve(eye)));
}

void check_dims(const NormalParams& base, const MomentViews& mv) {
    if (base.dim() != mv.dim()) {
        throw ValidationError("views have " + std::to_string(mv.dim()) + " variables, base has " +
                              std::to_string(base.dim()));
    }
}

}  // namespace

CanonicalNormal normal_to_canonical(const NormalParams& np) {
    const auto llt = factor_or_throw(np.cov(), "cov not positive definite");
    const Matrix precision = llt.solve(Matrix::Identity(np.dim(), np.dim()));
    return CanonicalNormal(precision * np.mean(), linalg::symmetrize(-0.5 * precision));
}

NormalParams canonical_to_normal(const CanonicalNormal& cn) {
    const auto llt = factor_or_throw(-2.0 * cn.theta_sigma(), "theta_sigma not negative definite");
    const Matrix cov = llt.solve(Matrix::Identity(cn.dim(), cn.dim()));
    return NormalParams(cov * cn.theta_mu(), linalg::symmetrize(cov));
}

double normal_log_partition(const CanonicalNormal& cn) {
    const Matrix minus_two = -2.0 * cn.theta_sigma();
    const auto llt = factor_or_throw(minus_two, "theta_sigma not negative definite");
    // -1/4 t' inv(S) t = 1/2 t' inv(-2 S) t
    const double quad = 0.5 * cn.theta_mu().dot(llt.solve(cn.theta_mu()));
    return quad - 0.5 * linalg::log_det(llt);
}

Matrix sigma_pseudo_inverse(const Matrix& cov, const Matrix& gamma) {
    if (cov.rows() != cov.cols() || gamma.cols() != cov.rows()) {
        throw ValidationError("pseudo-inverse: gamma has " + std::to_string(gamma.cols()) + " columns, cov is " +
                              std::to_string(cov.rows()) + "x" + std::to_string(cov.cols()));
    }
    if (!linalg::is_positive_definite(cov)) throw ValidationError("cov not positive definite");
    return project(cov, gamma, "gamma").pinv;
}

Matrix updated_covariance(const NormalParams& base, const MomentViews& mv) {
    check_dims(base, mv);
    if (mv.k_sigma() == 0) return base.cov();
    const auto block = project(base.cov(), mv.gamma_sigma(), "gamma_sigma");
    return covariance_update(base.cov(), block, mv.sigma2_info());
}

Vector mu_shift(const NormalParams& base, const MomentViews& mv) {
    check_dims(base, mv);
    if (mv.k_sigma() == 0) return base.mean();
    const auto block = project(base.cov(), mv.gamma_sigma(), "gamma_sigma");
    return shift_mean(base.mean(), mv.gamma_sigma(), block, mv.sigma2_info());
}

Vector updated_mean(const NormalParams& base, const MomentViews& mv) {
    return solve_moment_views(base, mv).updated.mean();
}

NormalMreSolution solve_moment_views(const NormalParams& base, const MomentViews& mv) {
    check_dims(base, mv);
    Matrix cov_bar = base.cov();
    Vector shifted = base.mean();
    Matrix theta_ss(0, 0);
    if (mv.k_sigma() > 0) {
        const auto block = project(base.cov(), mv.gamma_sigma(), "gamma_sigma");
        cov_bar = covariance_update(base.cov(), block, mv.sigma2_info());
        shifted = shift_mean(base.mean(), mv.gamma_sigma(), block, mv.sigma2_info());
        theta_ss = quadratic_multipliers(block, mv.sigma2_info());
    }
    auto corrected = correct_mean(shifted, cov_bar, mv.gamma_mu(), mv.mu_info());
    Vector eta = mv.gamma_sigma() * corrected.mean;
    return NormalMreSolution{NormalParams(std::move(corrected.mean), std::move(cov_bar)),
                             std::move(corrected.theta_mu), std::move(theta_ss), std::move(eta),
                             std::move(shifted), 0};
}

NormalMreSolution solve_uncorrelated(const NormalParams& base, const MomentViews& mv) {
    check_dims(base, mv);
    const Matrix cross = mv.gamma_mu() * base.cov() * mv.gamma_sigma().transpose();
    const double scale = std::max(1.0, base.cov().cwiseAbs().maxCoeff());
    if (cross.size() > 0 && cross.cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw ValidationError("uncorrelated shortcut: gamma_mu * cov * gamma_sigma' is not zero");
    }
    const Vector& mu = base.mean();
    Vector mean = mu;
    Vector theta_mu(0);
    if (mv.k_mu() > 0) {
        const auto mu_block = project(base.cov(), mv.gamma_mu(), "gamma_mu");
        theta_mu = mu_block.llt.solve(mv.mu_info() - mv.gamma_mu() * mu);
        mean += mu_block.pinv * (mv.mu_info() - mv.gamma_mu() * mu);
    }
    Matrix cov_bar = base.cov();
    Matrix theta_ss(0, 0);
    Vector shifted = mu;
    if (mv.k_sigma() > 0) {
        const auto block = project(base.cov(), mv.gamma_sigma(), "gamma_sigma");
        cov_bar = covariance_update(base.cov(), block, mv.sigma2_info());
        shifted = shift_mean(mu, mv.gamma_sigma(), block, mv.sigma2_info());
        mean += shifted - mu;
        theta_ss = quadratic_multipliers(block, mv.sigma2_info());
    }
    Vector eta = mv.gamma_sigma() * mean;
    return NormalMreSolution{NormalParams(std::move(mean), std::move(cov_bar)), std::move(theta_mu),
                             std::move(theta_ss), std::move(eta), std::move(shifted), 0};
}

NormalMreSolution solve_noncentral_fixed_point(const NormalParams& base,
                                               const Matrix& gamma_mu,
                                               const Vector& eta_mu,
                                               const Matrix& gamma_sigma,
                                               const Matrix& eta_sigma_sigma,
                                               const FixedPointConfig& config) {
    const Index n = base.dim();
    if (gamma_mu.rows() > 0 && gamma_mu.cols() != n) throw ValidationError("fixed point: gamma_mu has wrong column count");
    if (gamma_sigma.rows() > 0 && gamma_sigma.cols() != n) throw ValidationError("fixed point: gamma_sigma has wrong column count");
    if (eta_mu.size() != gamma_mu.rows()) throw ValidationError("fixed point: eta_mu length does not match gamma_mu rows");
    const Index ks = gamma_sigma.rows();
    if (eta_sigma_sigma.rows() != ks || eta_sigma_sigma.cols() != ks) {
        throw ValidationError("fixed point: eta_sigma_sigma shape does not match gamma_sigma rows");
    }
    if (!linalg::is_symmetric(eta_sigma_sigma)) throw ValidationError("eta_sigma_sigma not symmetric");
    if (!(config.relaxation > 0.0 && config.relaxation <= 1.0)) throw ValidationError("fixed point: relaxation must be in (0, 1]");
    if (config.max_iter < 1) throw ValidationError("fixed point: max_iter must be positive");

    const Matrix gm = gamma_mu.rows() > 0 ? gamma_mu : Matrix(0, n);
    const Matrix gs = ks > 0 ? gamma_sigma : Matrix(0, n);
    if (!linalg::has_full_row_rank(gm)) throw ValidationError("gamma_mu not full row rank");
    if (!linalg::has_full_row_rank(gs)) throw ValidationError("gamma_sigma not full row rank");

    // When every gamma_sigma row is a combination of gamma_mu rows, the implied
    // first moments follow from eta_mu directly.
    Vector eta = gs * base.mean();
    if (ks > 0 && gm.rows() > 0 && linalg::rows_in_span(gs, gm)) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gm);
        eta = gs * cod.solve(eta_mu);
    }

    const Matrix ess = linalg::symmetrize(eta_sigma_sigma);
    auto admissible = [&](const Vector& e) { return linalg::is_positive_definite(ess - e * e.transpose()); };
    if (ks > 0) {
        if (!linalg::is_positive_definite(ess)) throw ValidationError("eta_sigma_sigma not positive definite");
        // Shrink the starting point until eta_sigma_sigma - eta eta' is a covariance.
        for (int i = 0; i < 60 && !admissible(eta); ++i) eta *= 0.5;
        if (!admissible(eta)) eta.setZero();
    }
    const auto block = ks > 0 ? std::optional<ProjectedBlock>(project(base.cov(), gs, "gamma_sigma")) : std::nullopt;

    double diff = 0.0;
    for (int it = 1; it <= config.max_iter; ++it) {
        Matrix cov_bar = base.cov();
        Vector shifted = base.mean();
        Matrix theta_ss(0, 0);
        if (block) {
            const Matrix sigma2 = linalg::symmetrize(ess - eta * eta.transpose());
            if (!linalg::is_positive_definite(sigma2)) {
                throw InfeasibleError("fixed point: implied covariance eta_sigma_sigma - eta eta' lost positive "
                                      "definiteness at iteration " + std::to_string(it));
            }
            cov_bar = covariance_update(base.cov(), *block, sigma2);
            shifted = shift_mean(base.mean(), gs, *block, sigma2);
            theta_ss = quadratic_multipliers(*block, sigma2);
        }
        auto corrected = correct_mean(shifted, cov_bar, gm, eta_mu);
        const Vector eta_next = gs * corrected.mean;
        diff = ks > 0 ? (eta_next - eta).cwiseAbs().maxCoeff() : 0.0;
        if (!std::isfinite(diff)) throw NumericalError("fixed point: iteration produced non-finite values");
        if (diff < config.tol) {
            NormalParams updated(std::move(corrected.mean), std::move(cov_bar));
            // Residuals of the non-central views at the returned distribution.
            double resid = 0.0;
            if (gm.rows() > 0) resid = (gm * updated.mean() - eta_mu).cwiseAbs().maxCoeff();
            if (ks > 0) {
                const Vector m = gs * updated.mean();
                const Matrix second = gs * updated.cov() * gs.transpose() + m * m.transpose();
                resid = std::max(resid, (second - ess).cwiseAbs().maxCoeff());
            }
            if (resid > 1e-8) {
                throw ConvergenceError("fixed point: converged iterate violates the views by " + std::to_string(resid),
                                       it, resid);
            }
            return NormalMreSolution{std::move(updated), std::move(corrected.theta_mu), std::move(theta_ss),
                                     eta_next, std::move(shifted), it};
        }
        double r = config.relaxation;
        Vector candidate = (1.0 - r) * eta + r * eta_next;
        for (int i = 0; i < 60 && !admissible(candidate); ++i) {
            r *= 0.5;
            candidate = (1.0 - r) * eta + r * eta_next;
        }
        eta = std::move(candidate);
    }
    throw ConvergenceError("fixed point: no convergence within " + std::to_string(config.max_iter) + " iterations",
                           config.max_iter, diff);
}

LinearMultipliers linear_multipliers(const NormalParams& base, const MomentViews& mv, const Vector& eta_sigma) {
    check_dims(base, mv);
    if (eta_sigma.size() != mv.k_sigma()) throw ValidationError("linear multipliers: eta_sigma has wrong length");
    const Matrix cov_bar = updated_covariance(base, mv);
    const Vector shifted = mu_shift(base, mv);
    Matrix stacked(mv.k_mu() + mv.k_sigma(), mv.dim());
    stacked.topRows(mv.k_mu()) = mv.gamma_mu();
    stacked.bottomRows(mv.k_sigma()) = mv.gamma_sigma();
    Vector rhs(stacked.rows());
    rhs << mv.mu_info() - mv.gamma_mu() * shifted, eta_sigma - mv.gamma_sigma() * shifted;
    const auto llt = factor_or_throw(linalg::symmetrize(stacked * cov_bar * stacked.transpose()),
                                     "(gamma_mu; gamma_sigma) not full row rank");
    const Vector theta = llt.solve(rhs);
    return {theta.head(mv.k_mu()), theta.tail(mv.k_sigma())};
}

NormalParams family_member(const NormalParams& base, const MomentViews& mv, const Vector& eta_sigma) {
    const auto mult = linear_multipliers(base, mv, eta_sigma);
    const Matrix cov_bar = updated_covariance(base, mv);
    const Vector shifted = mu_shift(base, mv);
    Vector mean = shifted + cov_bar * (mv.gamma_mu().transpose() * mult.theta_mu +
                                       mv.gamma_sigma().transpose() * mult.theta_sigma);
    return NormalParams(std::move(mean), cov_bar);
}

}  // namespace mre
