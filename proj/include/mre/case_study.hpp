#pragma once

#include "mre/analytic_normal.hpp"
#include "mre/iterative.hpp"

namespace mre {

/// Seven variables, 10% expectations, 20% volatilities, 70% correlations.
NormalParams case_study_base();

/// E[X3] = 35% and corr(X1, X2) = -80%, with the first two moments of X1 and X2 unchanged.
MomentViews case_study_views();

/// Sampler and pooling settings used for the case study.
IterativeConfig case_study_config(int n_scenarios = 100000, std::uint64_t seed = 20240601);

struct CaseStudyResult {
    NormalParams base;
    NormalMreSolution analytic;
    ExpectationViews expanded_views;
    IterativeResult iterative;
    double analytic_seconds = 0.0;
    double iterative_seconds = 0.0;
};

/// Runs both the closed form and the iterative algorithm on the same inputs.
/// The iterative trace errors are measured against the closed form.
CaseStudyResult run_case_study(const IterativeConfig& cfg);

/// n points of the one-standard-deviation ellipse of the (i, j) marginal, n x 2.
Matrix ellipse_points(const Vector& mean, const Matrix& cov, Index i, Index j, int n = 100);

}  // namespace mre
