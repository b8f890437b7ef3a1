#include "mre/diagnostics.hpp"

#include "mre/error.hpp"
#include "mre/linalg.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>

namespace mre {

double relative_entropy_discrete(const Vector& p_bar, const Vector& p) {
    if (p_bar.size() != p.size()) {
        throw ValidationError("relative entropy: lengths differ (" + std::to_string(p_bar.size()) + " vs " +
                              std::to_string(p.size()) + ")");
    }
    double sum = 0.0;
    for (Index j = 0; j < p.size(); ++j) {
        if (!(p[j] > 0.0)) throw ValidationError("relative entropy: base probability " + std::to_string(j) + " is not positive");
        if (p_bar[j] < 0.0) throw ValidationError("relative entropy: negative probability at " + std::to_string(j));
        if (p_bar[j] > 0.0) sum += p_bar[j] * std::log(p_bar[j] / p[j]);
    }
    // Rounding can push an exact zero slightly negative.
    return std::max(sum, 0.0);
}

double ens(const Vector& p_bar, const Vector& p) { return std::exp(-relative_entropy_discrete(p_bar, p)); }

double relative_entropy_normal(const NormalParams& n1, const NormalParams& n0) {
    if (n1.dim() != n0.dim()) throw ValidationError("relative entropy: normals have different dimensions");
    const auto llt0 = linalg::cholesky(n0.cov());
    const auto llt1 = linalg::cholesky(n1.cov());
    if (!llt0 || !llt1) throw ValidationError("cov not positive definite");
    const Vector diff = n0.mean() - n1.mean();
    const double trace_term = llt0->solve(n1.cov()).trace();
    const double maha = diff.dot(llt0->solve(diff));
    const double logdet = linalg::log_det(*llt0) - linalg::log_det(*llt1);
    return std::max(0.0, 0.5 * (trace_term + maha - static_cast<double>(n1.dim()) + logdet));
}

Vector view_residual(const WeightedScenarios& ws, const ExpectationViews& views) {
    if (ws.dim() != views.input_dim()) {
        throw ValidationError("view residual: scenarios have " + std::to_string(ws.dim()) +
                              " variables, views expect " + std::to_string(views.input_dim()));
    }
    Matrix features;
    views.feature_map().evaluate_rows(ws.scenarios(), features);
    return features.transpose() * ws.probs() - views.targets();
}

std::pair<Vector, Matrix> weighted_moments(const WeightedScenarios& ws) {
    const Vector& p = ws.probs();
    const Vector mean = ws.scenarios().transpose() * p;
    const Matrix centered = ws.scenarios().rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * p.asDiagonal() * centered;
    return {mean, linalg::symmetrize(cov)};
}

ExpectationViews expand_moment_views(const MomentViews& mv, const Vector& pinned_mean) {
    const Index n = mv.dim();
    if (pinned_mean.size() != n) {
        throw ValidationError("expand views: pinned mean has length " + std::to_string(pinned_mean.size()) +
                              ", views have " + std::to_string(n) + " variables");
    }
    const Matrix& gs = mv.gamma_sigma();
    const Vector pinned = gs * pinned_mean;

    // Linear block: gamma_mu rows, then the pinned rows that add new directions.
    Matrix linear = mv.gamma_mu();
    Vector linear_targets = mv.mu_info();
    std::vector<Index> kept;
    for (Index r = 0; r < gs.rows(); ++r) {
        const Matrix row = gs.row(r);
        if (linear.rows() > 0 && linalg::rows_in_span(row, linear)) {
            // Value implied by the other linear views must agree with the pin.
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(linear.transpose());
            const Vector coeffs = cod.solve(row.transpose());
            const double implied = coeffs.dot(linear_targets);
            const double scale = std::max(1.0, std::abs(pinned[r]));
            if (std::abs(implied - pinned[r]) > 1e-10 * scale) {
                throw ValidationError("expand views: pinned mean of gamma_sigma row " + std::to_string(r) +
                                      " contradicts mu_info");
            }
            continue;
        }
        kept.push_back(r);
        linear.conservativeResize(linear.rows() + 1, n);
        linear.row(linear.rows() - 1) = row;
        linear_targets.conservativeResize(linear_targets.size() + 1);
        linear_targets[linear_targets.size() - 1] = pinned[r];
    }

    const Index k_mu = mv.k_mu();
    Matrix pinned_rows = linear.bottomRows(linear.rows() - k_mu);

    const Index q = gs.rows();
    const Matrix second = mv.sigma2_info() + pinned * pinned.transpose();
    Vector targets(linear_targets.size() + q * (q + 1) / 2);
    targets.head(linear_targets.size()) = linear_targets;
    Index pos = linear_targets.size();
    for (Index r = 0; r < q; ++r) {
        for (Index c = r; c < q; ++c) targets[pos++] = second(r, c);
    }

    auto map = std::make_shared<MomentFeatureMap>(mv.gamma_mu(), pinned_rows, gs);
    return ExpectationViews(std::move(map), std::move(targets));
}

double jacobian_fd_error(const FeatureMap& map, const Vector& x, double step) {
    const Matrix analytic = map.jacobian(x);
    const Index n = map.input_dim();
    const Index k = map.output_dim();
    Matrix numeric(k, n);
    Vector xp = x;
    for (Index i = 0; i < n; ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        const Vector fp = map(xp);
        xp[i] = x[i] - h;
        const Vector fm = map(xp);
        xp[i] = x[i];
        numeric.col(i) = (fp - fm) / (2.0 * h);
    }
    double worst = 0.0;
    for (Index r = 0; r < k; ++r) {
        for (Index c = 0; c < n; ++c) {
            const double err = std::abs(analytic(r, c) - numeric(r, c)) / std::max(1.0, std::abs(numeric(r, c)));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace mre
