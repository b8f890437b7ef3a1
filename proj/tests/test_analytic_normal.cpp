#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mre/analytic_normal.hpp"
#include "mre/case_study.hpp"
#include "mre/diagnostics.hpp"
#include "mre/error.hpp"
#include "mre/linalg.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace mre;

namespace {

struct Problem {
    NormalParams base;
    MomentViews views;
};

// Random feasible problem: the views are the moments of some other normal.
Problem random_problem(oracle::Rng& rng, Index n, Index km, Index ks) {
    if (km == 0 && ks == 0) ks = 1;
    NormalParams base(rng.normal_vector(n), rng.spd(n));
    const Vector m2 = rng.normal_vector(n);
    const Matrix c2 = rng.spd(n);
    const Matrix gm = km > 0 ? rng.full_rank_rows(km, n) : Matrix(0, n);
    const Matrix gs = ks > 0 ? rng.full_rank_rows(ks, n) : Matrix(0, n);
    Matrix s = gs * c2 * gs.transpose();
    s = linalg::symmetrize(s);
    return {base, MomentViews(gm, gm * m2, gs, s)};
}

// Row space of `d` (symmetric) lies in the row space of g.
bool quadratic_in_span(const Matrix& d, const Matrix& g) {
    if (g.rows() == 0) return d.norm() < 1e-9;
    return linalg::rows_in_span(d, g, 1e-8);
}

}  // namespace

TEST_CASE("canonical round trip and log-partition link") {
    oracle::Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = rng.integer(1, 5);
        NormalParams np(rng.normal_vector(n), rng.spd(n));
        const CanonicalNormal cn = normal_to_canonical(np);
        const NormalParams back = canonical_to_normal(cn);
        CHECK((back.mean() - np.mean()).norm() < 1e-10);
        CHECK((back.cov() - np.cov()).norm() < 1e-10);

        // d psi / d theta_mu = mean
        auto psi_mu = [&](const Vector& t) { return normal_log_partition(CanonicalNormal(t, cn.theta_sigma())); };
        CHECK((oracle::fd_gradient(psi_mu, cn.theta_mu(), 1e-6) - np.mean()).norm() < 1e-5);

        // d psi / d theta_sigma(a, b) = E[X_a X_b] for a symmetric perturbation
        const Matrix second = np.cov() + np.mean() * np.mean().transpose();
        for (Index a = 0; a < n; ++a) {
            const double h = 1e-6;
            Matrix tp = cn.theta_sigma(), tm = cn.theta_sigma();
            tp(a, a) += h;
            tm(a, a) -= h;
            const double d = (normal_log_partition(CanonicalNormal(cn.theta_mu(), tp)) -
                              normal_log_partition(CanonicalNormal(cn.theta_mu(), tm))) / (2 * h);
            CHECK(d == doctest::Approx(second(a, a)).epsilon(1e-5));
        }
    }
}

TEST_CASE("pseudo-inverse is a right inverse") {
    oracle::Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = rng.integer(2, 6);
        const Index k = rng.integer(1, n);
        const Matrix cov = rng.spd(n);
        const Matrix g = rng.full_rank_rows(k, n);
        CHECK((g * sigma_pseudo_inverse(cov, g) - Matrix::Identity(k, k)).norm() < 1e-10);
    }
    CHECK_THROWS_AS(sigma_pseudo_inverse(Matrix::Identity(2, 2), Matrix::Zero(1, 2)), ValidationError);
}

TEST_CASE("closed form satisfies the views and has exponential-family structure") {
    oracle::Rng rng(3);
    for (int rep = 0; rep < 60; ++rep) {
        const Index n = rng.integer(1, 6);
        const Index km = rng.integer(0, n);
        const Index ks = rng.integer(0, n);
        const Problem pr = random_problem(rng, n, km, ks);
        const auto sol = solve_moment_views(pr.base, pr.views);
        const Matrix& gm = pr.views.gamma_mu();
        const Matrix& gs = pr.views.gamma_sigma();
        const Vector& mb = sol.updated.mean();
        const Matrix& cb = sol.updated.cov();

        if (km > 0) CHECK((gm * mb - pr.views.mu_info()).cwiseAbs().maxCoeff() < 1e-9);
        if (ks > 0) CHECK((gs * cb * gs.transpose() - pr.views.sigma2_info()).cwiseAbs().maxCoeff() < 1e-9);

        // Stationarity: the tilt only adds quadratic terms in gamma_sigma x and
        // linear terms in (gamma_mu; gamma_sigma) x.
        const Matrix p0 = pr.base.cov().inverse();
        const Matrix p1 = cb.inverse();
        const Matrix dprec = p1 - p0;
        CHECK(quadratic_in_span(dprec, gs));
        if (ks > 0) CHECK((dprec + 2.0 * gs.transpose() * sol.theta_sigma_info * gs).cwiseAbs().maxCoeff() < 1e-7);
        Matrix stacked(gm.rows() + gs.rows(), n);
        stacked.topRows(gm.rows()) = gm;
        stacked.bottomRows(gs.rows()) = gs;
        const Vector dlin = p1 * mb - p0 * pr.base.mean();
        if (stacked.rows() > 0) {
            CHECK(linalg::rows_in_span(dlin.transpose(), stacked, 1e-7));
        } else {
            CHECK(dlin.norm() < 1e-9);
        }

        // The covariance tilt alone keeps the base's linear natural parameter.
        CHECK((p1 * sol.mu_shift - p0 * pr.base.mean()).norm() < 1e-7);
        CHECK((sol.eta_sigma_info - gs * mb).norm() < 1e-12);
        CHECK(relative_entropy_normal(sol.updated, pr.base) >= -1e-12);
    }
}

TEST_CASE("closed form minimizes entropy among feasible normals") {
    // Perturb the solution within the feasible set and check the divergence
    // does not drop. With covariance views the mean is the one implied by the
    // non-central formulation, so only the covariance is perturbed there.
    oracle::Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = rng.integer(2, 5);
        const Problem pr = random_problem(rng, n, rng.integer(0, n - 1), rng.integer(0, n - 1));
        const auto sol = solve_moment_views(pr.base, pr.views);
        const double best = relative_entropy_normal(sol.updated, pr.base);
        const Matrix& gm = pr.views.gamma_mu();
        const Matrix& gs = pr.views.gamma_sigma();
        // Null-space projectors: moves along them keep the views satisfied.
        auto null_proj = [n](const Matrix& g) -> Matrix {
            if (g.rows() == 0) return Matrix::Identity(n, n);
            return Matrix::Identity(n, n) - g.transpose() * (g * g.transpose()).inverse() * g;
        };
        const Matrix pm = null_proj(gm), ps = null_proj(gs);
        for (int t = 0; t < 20; ++t) {
            const Vector dm = gs.rows() == 0 ? Vector(pm * rng.normal_vector(n) * 0.05) : Vector::Zero(n);
            // B such that gs B = 0: B = ps A, cov + B + B' stays feasible.
            const Matrix a = rng.normal_matrix(n, n) * 0.02;
            Matrix dc = ps * a * ps;
            dc = linalg::symmetrize(dc);
            const Matrix c2 = sol.updated.cov() + dc;
            if (!linalg::is_positive_definite(c2)) continue;
            NormalParams other(sol.updated.mean() + dm, c2);
            CHECK(relative_entropy_normal(other, pr.base) >= best - 1e-12);
        }
    }
}

TEST_CASE("trivial views leave the base unchanged") {
    oracle::Rng rng(5);
    const Index n = 4;
    NormalParams base(rng.normal_vector(n), rng.spd(n));
    const Matrix g = rng.full_rank_rows(2, n);
    Matrix s = g * base.cov() * g.transpose();
    s = linalg::symmetrize(s);
    MomentViews mv(g, g * base.mean(), g, s);
    const auto sol = solve_moment_views(base, mv);
    CHECK((sol.updated.mean() - base.mean()).norm() < 1e-10);
    CHECK((sol.updated.cov() - base.cov()).norm() < 1e-10);
    CHECK(sol.theta_mu_info.norm() < 1e-8);
    CHECK(sol.theta_sigma_info.norm() < 1e-8);
}

TEST_CASE("case study closed form") {
    const auto sol = solve_moment_views(case_study_base(), case_study_views());
    const Vector m = sol.updated.mean() * 100.0;
    const Vector s = sol.updated.std_devs() * 100.0;
    const Matrix r = sol.updated.correlation() * 100.0;
    for (int i = 0; i < 2; ++i) {
        CHECK(m[i] == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(s[i] == doctest::Approx(20.0).epsilon(1e-12));
    }
    CHECK(m[2] == doctest::Approx(35.0).epsilon(1e-12));
    for (int i = 3; i < 7; ++i) CHECK(std::abs(m[i] - 17.29) < 0.005);
    for (int i = 2; i < 7; ++i) CHECK(std::abs(s[i] - 14.02) < 0.005);
    CHECK(std::abs(r(0, 1) + 80.0) < 1e-8);
    CHECK(std::abs(r(0, 2) - 11.75) < 0.005);
    CHECK(std::abs(r(2, 3) - 38.94) < 0.005);
    CHECK(std::abs(r(3, 4) - 38.94) < 0.005);
}

TEST_CASE("infeasible and inconsistent inputs") {
    NormalParams base(Vector::Zero(2), Matrix::Identity(2, 2));
    MomentViews wrong_dim(Matrix::Identity(1, 3), Vector::Zero(1), Matrix(0, 3), Matrix(0, 0));
    CHECK_THROWS_AS(solve_moment_views(base, wrong_dim), ValidationError);
}

TEST_CASE("uncorrelated shortcut matches the general solver") {
    oracle::Rng rng(6);
    for (int rep = 0; rep < 40; ++rep) {
        const Index n = rng.integer(2, 6);
        const Index ks = rng.integer(1, n - 1);
        const Index km = rng.integer(1, n - ks);
        NormalParams base(rng.normal_vector(n), rng.spd(n));
        const Matrix gs = rng.full_rank_rows(ks, n);
        Matrix r = rng.normal_matrix(km, n);
        const Matrix gs_pinv = sigma_pseudo_inverse(base.cov(), gs);
        const Matrix gm = r - r * gs_pinv * gs;  // gm * cov * gs' = 0
        if (!linalg::has_full_row_rank(gm, 1e-6)) continue;
        const Matrix s = rng.spd(ks);
        MomentViews mv(gm, rng.normal_vector(km), gs, s);
        const auto a = solve_moment_views(base, mv);
        const auto b = solve_uncorrelated(base, mv);
        CHECK((a.updated.mean() - b.updated.mean()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.updated.cov() - b.updated.cov()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.theta_mu_info - b.theta_mu_info).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK_THROWS_AS(solve_uncorrelated(case_study_base(), case_study_views()), ValidationError);
}

TEST_CASE("non-central fixed point reproduces the central solution") {
    oracle::Rng rng(7);
    int converged = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const Index n = rng.integer(2, 5);
        const Problem pr = random_problem(rng, n, rng.integer(0, n), rng.integer(1, n));
        const auto central = solve_moment_views(pr.base, pr.views);
        const Vector eta = pr.views.gamma_sigma() * central.updated.mean();
        const Matrix ess = pr.views.sigma2_info() + eta * eta.transpose();
        for (double relax : {1.0, 0.5}) {
            FixedPointConfig cfg;
            cfg.relaxation = relax;
            cfg.max_iter = 5000;
            try {
                const auto nc = solve_noncentral_fixed_point(pr.base, pr.views.gamma_mu(), pr.views.mu_info(),
                                                             pr.views.gamma_sigma(), ess, cfg);
                ++converged;
                CHECK((nc.updated.mean() - central.updated.mean()).cwiseAbs().maxCoeff() < 1e-7);
                CHECK((nc.updated.cov() - central.updated.cov()).cwiseAbs().maxCoeff() < 1e-8);
                CHECK(nc.iterations >= 1);
            } catch (const ConvergenceError& e) {
                CHECK(e.iterations() == cfg.max_iter);
            }
        }
    }
    CHECK(converged > 0);
}

TEST_CASE("fixed point contracts, needs averaging, or diverges with an error") {
    // One variable, view on E[X^2] = e only: eta <- c (e - eta^2), c = mean / var.
    NormalParams base(Vector::Ones(1), Matrix::Identity(1, 1));
    const Matrix g = Matrix::Identity(1, 1);
    const Matrix none(0, 1);
    auto run = [&](double e, double relax) {
        FixedPointConfig cfg;
        cfg.relaxation = relax;
        return solve_noncentral_fixed_point(base, none, Vector(0), g, Matrix::Constant(1, 1, e), cfg);
    };
    auto root = [](double e) { return 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * e)); };

    // slope -0.15: both converge
    CHECK(run(0.2, 1.0).updated.mean()[0] == doctest::Approx(root(0.2)).epsilon(1e-9));
    CHECK(run(0.2, 0.5).updated.mean()[0] == doctest::Approx(root(0.2)).epsilon(1e-9));
    // slope -1.24: plain iteration oscillates, averaging converges
    CHECK_THROWS_AS(run(1.0, 1.0), ConvergenceError);
    const auto avg = run(1.0, 0.5);
    CHECK(avg.updated.mean()[0] == doctest::Approx(root(1.0)).epsilon(1e-9));
    CHECK(avg.updated.cov()(0, 0) + root(1.0) * root(1.0) == doctest::Approx(1.0).epsilon(1e-9));
    // slope -5.4: both fail loudly
    CHECK_THROWS_AS(run(10.0, 1.0), ConvergenceError);
    CHECK_THROWS_AS(run(10.0, 0.5), ConvergenceError);
}

TEST_CASE("family member and entropy gradient equal the multipliers") {
    oracle::Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = rng.integer(2, 5);
        const Index ks = rng.integer(1, n - 1);
        const Index km = rng.integer(1, n - ks);
        const Problem pr = random_problem(rng, n, km, ks);
        const auto sol = solve_moment_views(pr.base, pr.views);
        const Vector eta = sol.eta_sigma_info;

        const NormalParams f = family_member(pr.base, pr.views, eta);
        CHECK((f.mean() - sol.updated.mean()).norm() < 1e-9);
        const auto mult = linear_multipliers(pr.base, pr.views, eta);
        CHECK(mult.theta_sigma.cwiseAbs().maxCoeff() < 1e-10);
        CHECK((mult.theta_mu - sol.theta_mu_info).norm() < 1e-8);

        // Off the optimum: the entropy of the family member, as a function of
        // its expectation parameters, has the multipliers as gradient.
        const Vector eta1 = eta + 0.1 * rng.normal_vector(ks);
        const auto m1 = linear_multipliers(pr.base, pr.views, eta1);
        auto entropy_eta = [&](const Vector& e) {
            return relative_entropy_normal(family_member(pr.base, pr.views, e), pr.base);
        };
        const Vector g_eta = oracle::fd_gradient(entropy_eta, eta1, 1e-6);
        const Vector expect_eta = m1.theta_sigma + 2.0 * sol.theta_sigma_info * eta1;
        CHECK((g_eta - expect_eta).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, expect_eta.cwiseAbs().maxCoeff()));

        auto entropy_mu = [&](const Vector& info) {
            MomentViews mv(pr.views.gamma_mu(), info, pr.views.gamma_sigma(), pr.views.sigma2_info());
            return relative_entropy_normal(family_member(pr.base, mv, eta1), pr.base);
        };
        const Vector g_mu = oracle::fd_gradient(entropy_mu, pr.views.mu_info(), 1e-6);
        CHECK((g_mu - m1.theta_mu).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, m1.theta_mu.cwiseAbs().maxCoeff()));
    }
}
