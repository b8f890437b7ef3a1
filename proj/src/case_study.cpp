#include "mre/case_study.hpp"

#include "mre/diagnostics.hpp"
#include "mre/error.hpp"
#include "mre/linalg.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace mre {

NormalParams case_study_base() {
    const Index n = 7;
    Matrix corr = Matrix::Constant(n, n, 0.7);
    corr.diagonal().setOnes();
    const Vector sd = Vector::Constant(n, 0.2);
    return NormalParams(Vector::Constant(n, 0.1), sd.asDiagonal() * corr * sd.asDiagonal());
}

MomentViews case_study_views() {
    const Index n = 7;
    Matrix gamma_mu = Matrix::Zero(3, n);
    gamma_mu(0, 0) = gamma_mu(1, 1) = gamma_mu(2, 2) = 1.0;
    Vector mu_info(3);
    mu_info << 0.1, 0.1, 0.35;
    Matrix gamma_sigma = Matrix::Zero(2, n);
    gamma_sigma(0, 0) = gamma_sigma(1, 1) = 1.0;
    Matrix sigma2(2, 2);
    sigma2 << 0.04, -0.8 * 0.04, -0.8 * 0.04, 0.04;
    return MomentViews(gamma_mu, mu_info, gamma_sigma, sigma2);
}

IterativeConfig case_study_config(int n_scenarios, std::uint64_t seed) {
    IterativeConfig cfg;
    cfg.n_scenarios = n_scenarios;
    cfg.delta = 0.01;
    cfg.max_outer = 10;
    cfg.hmc.step_size = 0.05;
    cfg.hmc.n_leapfrog = 20;
    cfg.hmc.n_burnin = 1000;
    cfg.hmc.adapt = true;
    cfg.hmc.target_accept = 0.8;
    cfg.hmc.step_jitter = 0.2;
    cfg.hmc.seed = seed;
    return cfg;
}

CaseStudyResult run_case_study(const IterativeConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const NormalParams base = case_study_base();
    const MomentViews views = case_study_views();

    const auto t0 = clock::now();
    NormalMreSolution analytic = solve_moment_views(base, views);
    const auto t1 = clock::now();

    ExpectationViews expanded = expand_moment_views(views, analytic.updated.mean());
    IterativeConfig icfg = cfg;
    icfg.reference = analytic.updated;
    IterativeResult iterative = run(normal_log_numerator(base), expanded, icfg);
    const auto t2 = clock::now();

    return CaseStudyResult{base,
                           std::move(analytic),
                           std::move(expanded),
                           std::move(iterative),
                           std::chrono::duration<double>(t1 - t0).count(),
                           std::chrono::duration<double>(t2 - t1).count()};
}

Matrix ellipse_points(const Vector& mean, const Matrix& cov, Index i, Index j, int n) {
    if (mean.size() != cov.rows() || cov.rows() != cov.cols()) throw ValidationError("ellipse: shapes disagree");
    if (i < 0 || j < 0 || i >= mean.size() || j >= mean.size() || i == j) {
        throw ValidationError("ellipse: bad variable pair (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")");
    }
    if (n < 3) throw ValidationError("ellipse: need at least 3 points");
    Matrix block(2, 2);
    block << cov(i, i), cov(i, j), cov(j, i), cov(j, j);
    const auto llt = linalg::cholesky(block);
    if (!llt) throw ValidationError("ellipse: marginal covariance not positive definite");
    const Matrix l = llt->matrixL();
    Matrix out(n, 2);
    for (int t = 0; t < n; ++t) {
        const double a = 2.0 * std::numbers::pi * t / n;
        const Eigen::Vector2d u(std::cos(a), std::sin(a));
        const Eigen::Vector2d p = Eigen::Vector2d(mean[i], mean[j]) + l * u;
        out.row(t) = p.transpose();
    }
    return out;
}

}  // namespace mre
