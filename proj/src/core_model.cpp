#include "mre/core_model.hpp"

#include "mre/error.hpp"
#include "mre/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mre {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// NormalParams

NormalParams::NormalParams(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (mean_.size() < 1) throw ValidationError("normal: dimension must be at least 1");
    if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
        throw ValidationError("normal: covariance is " + std::to_string(cov_.rows()) + "x" +
                              std::to_string(cov_.cols()) + " but mean has length " +
                              std::to_string(mean_.size()));
    }
    if (!all_finite(cov_) || !mean_.allFinite()) throw ValidationError("normal: non-finite entries");
    if (!linalg::is_symmetric(cov_)) throw ValidationError("cov not symmetric");
    if (!linalg::is_positive_definite(cov_)) throw ValidationError("cov not positive definite");
    cov_ = linalg::symmetrize(cov_);
}

Vector NormalParams::std_devs() const { return cov_.diagonal().cwiseSqrt(); }

Matrix NormalParams::correlation() const {
    const Vector inv_sd = std_devs().cwiseInverse();
    return inv_sd.asDiagonal() * cov_ * inv_sd.asDiagonal();
}

// ---------------------------------------------------------------------------
// CanonicalNormal

CanonicalNormal::CanonicalNormal(Vector theta_mu, Matrix theta_sigma)
    : theta_mu_(std::move(theta_mu)), theta_sigma_(std::move(theta_sigma)) {
    if (theta_sigma_.rows() != theta_sigma_.cols() || theta_sigma_.rows() != theta_mu_.size()) {
        throw ValidationError("canonical normal: theta_sigma shape does not match theta_mu");
    }
    if (!linalg::is_symmetric(theta_sigma_)) throw ValidationError("theta_sigma not symmetric");
    if (!linalg::is_positive_definite(-theta_sigma_)) {
        throw ValidationError("theta_sigma not negative definite (outside the natural parameter domain)");
    }
    theta_sigma_ = linalg::symmetrize(theta_sigma_);
}

// ---------------------------------------------------------------------------
// WeightedScenarios

WeightedScenarios::WeightedScenarios(Matrix scenarios, Vector probs)
    : scenarios_(std::move(scenarios)), probs_(std::move(probs)) {
    if (scenarios_.rows() < 2) throw ValidationError("scenarios: need at least 2 scenarios");
    if (scenarios_.cols() < 1) throw ValidationError("scenarios: need at least 1 variable");
    if (probs_.size() != scenarios_.rows()) {
        throw ValidationError("scenarios: " + std::to_string(probs_.size()) + " probabilities for " +
                              std::to_string(scenarios_.rows()) + " scenarios");
    }
    if (!scenarios_.allFinite()) throw ValidationError("scenarios: non-finite entries");
    for (Index j = 0; j < probs_.size(); ++j) {
        if (!(probs_[j] > 0.0)) {
            throw ValidationError("scenarios: probability " + std::to_string(j) + " is not positive");
        }
    }
    if (std::abs(probs_.sum() - 1.0) > 1e-12) throw ValidationError("scenarios: probabilities do not sum to 1");
}

WeightedScenarios WeightedScenarios::uniform(Matrix scenarios) {
    const Index j = scenarios.rows();
    Vector p = Vector::Constant(j, j > 0 ? 1.0 / static_cast<double>(j) : 0.0);
    return WeightedScenarios(std::move(scenarios), std::move(p));
}

WeightedScenarios WeightedScenarios::with_probs(Vector probs) const {
    return WeightedScenarios(scenarios_, std::move(probs));
}

// ---------------------------------------------------------------------------
// FeatureMap defaults

void FeatureMap::jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
    const Index n = input_dim();
    const Index k = output_dim();
    Vector xp = x;
    Vector fp(k);
    Vector fm(k);
    for (Index i = 0; i < n; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        evaluate(xp, fp);
        xp[i] = x[i] - h;
        evaluate(xp, fm);
        xp[i] = x[i];
        out.col(i) = (fp - fm) / (2.0 * h);
    }
}

void FeatureMap::jacobian_transpose_times(const Eigen::Ref<const Vector>& x,
                                          const Eigen::Ref<const Vector>& theta,
                                          Eigen::Ref<Vector> out) const {
    Matrix jac(output_dim(), input_dim());
    jacobian(x, jac);
    out.noalias() = jac.transpose() * theta;
}

void FeatureMap::evaluate_rows(const Matrix& points, Matrix& out) const {
    out.resize(points.rows(), output_dim());
    Vector x(points.cols());
    Vector f(output_dim());
    for (Index j = 0; j < points.rows(); ++j) {
        x = points.row(j).transpose();
        evaluate(x, f);
        out.row(j) = f.transpose();
    }
}

Vector FeatureMap::operator()(const Vector& x) const {
    Vector out(output_dim());
    evaluate(x, out);
    return out;
}

Matrix FeatureMap::jacobian(const Vector& x) const {
    Matrix out(output_dim(), input_dim());
    jacobian(Eigen::Ref<const Vector>(x), out);
    return out;
}

// ---------------------------------------------------------------------------
// CallableFeatureMap

CallableFeatureMap::CallableFeatureMap(Index input_dim, Index output_dim, Eval eval, Jac jac)
    : n_(input_dim), k_(output_dim), eval_(std::move(eval)), jac_(std::move(jac)) {
    if (n_ < 1 || k_ < 1) throw ValidationError("feature map: dimensions must be positive");
    if (!eval_) throw ValidationError("feature map: missing evaluation function");
}

void CallableFeatureMap::evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
    Vector v = eval_(Vector(x));
    if (v.size() != k_) throw ValidationError("feature map: callable returned wrong length");
    out = v;
}

void CallableFeatureMap::jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
    if (!jac_) {
        FeatureMap::jacobian(x, out);
        return;
    }
    Matrix j = jac_(Vector(x));
    if (j.rows() != k_ || j.cols() != n_) throw ValidationError("feature map: Jacobian has wrong shape");
    out = j;
}

// ---------------------------------------------------------------------------
// PolynomialFeatureMap

PolynomialFeatureMap::PolynomialFeatureMap(Index input_dim, std::vector<QuadraticFeature> features)
    : n_(input_dim), features_(std::move(features)) {
    if (n_ < 1) throw ValidationError("polynomial features: input dimension must be positive");
    if (features_.empty()) throw ValidationError("polynomial features: need at least one feature");
    for (std::size_t i = 0; i < features_.size(); ++i) {
        auto& f = features_[i];
        if (f.linear.size() == 0) f.linear = Vector::Zero(n_);
        if (f.quadratic.size() == 0) f.quadratic = Matrix::Zero(n_, n_);
        if (f.linear.size() != n_ || f.quadratic.rows() != n_ || f.quadratic.cols() != n_) {
            throw ValidationError("polynomial features: feature " + std::to_string(i) + " has wrong shape");
        }
        f.quadratic = linalg::symmetrize(f.quadratic);
    }
}

void PolynomialFeatureMap::evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        const auto& f = features_[i];
        out[static_cast<Index>(i)] = f.constant + f.linear.dot(x) + x.dot(f.quadratic * x);
    }
}

void PolynomialFeatureMap::jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        const auto& f = features_[i];
        out.row(static_cast<Index>(i)) = (f.linear + 2.0 * (f.quadratic * x)).transpose();
    }
}

// ---------------------------------------------------------------------------
// MomentFeatureMap

MomentFeatureMap::MomentFeatureMap(Matrix linear_mean_rows, Matrix linear_pinned_rows, Matrix quadratic_rows)
    : n_(std::max({linear_mean_rows.cols(), linear_pinned_rows.cols(), quadratic_rows.cols()})),
      mean_rows_(std::move(linear_mean_rows)),
      pinned_rows_(std::move(linear_pinned_rows)),
      quad_rows_(std::move(quadratic_rows)) {
    if (n_ < 1) throw ValidationError("moment features: input dimension must be positive");
    if (mean_rows_.rows() == 0) mean_rows_.resize(0, n_);
    if (pinned_rows_.rows() == 0) pinned_rows_.resize(0, n_);
    if (quad_rows_.rows() == 0) quad_rows_.resize(0, n_);
    if (mean_rows_.cols() != n_ || pinned_rows_.cols() != n_ || quad_rows_.cols() != n_) {
        throw ValidationError("moment features: blocks disagree on the input dimension");
    }
    if (output_dim() < 1) throw ValidationError("moment features: no features");
}

Index MomentFeatureMap::output_dim() const {
    const Index q = quad_rows_.rows();
    return mean_rows_.rows() + pinned_rows_.rows() + q * (q + 1) / 2;
}

void MomentFeatureMap::evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
    const Index a = n_mean();
    const Index b = n_pinned();
    const Index q = n_quadratic();
    out.head(a).noalias() = mean_rows_ * x;
    out.segment(a, b).noalias() = pinned_rows_ * x;
    const Vector y = quad_rows_ * x;
    Index pos = a + b;
    for (Index r = 0; r < q; ++r) {
        for (Index c = r; c < q; ++c) out[pos++] = y[r] * y[c];
    }
}

void MomentFeatureMap::jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
    const Index a = n_mean();
    const Index b = n_pinned();
    const Index q = n_quadratic();
    out.topRows(a) = mean_rows_;
    out.middleRows(a, b) = pinned_rows_;
    const Vector y = quad_rows_ * x;
    Index pos = a + b;
    for (Index r = 0; r < q; ++r) {
        for (Index c = r; c < q; ++c) {
            out.row(pos++) = y[c] * quad_rows_.row(r) + y[r] * quad_rows_.row(c);
        }
    }
}

void MomentFeatureMap::jacobian_transpose_times(const Eigen::Ref<const Vector>& x,
                                                const Eigen::Ref<const Vector>& theta,
                                                Eigen::Ref<Vector> out) const {
    const Index a = n_mean();
    const Index b = n_pinned();
    const Index q = n_quadratic();
    out.noalias() = mean_rows_.transpose() * theta.head(a);
    out.noalias() += pinned_rows_.transpose() * theta.segment(a, b);
    if (q == 0) return;
    // d/dx sum_{r<=c} t_rc y_r y_c = C' M y, M symmetric with M_rr = 2 t_rr.
    Matrix m = Matrix::Zero(q, q);
    Index pos = a + b;
    for (Index r = 0; r < q; ++r) {
        for (Index c = r; c < q; ++c) {
            const double t = theta[pos++];
            if (r == c) {
                m(r, r) = 2.0 * t;
            } else {
                m(r, c) = t;
                m(c, r) = t;
            }
        }
    }
    const Vector y = quad_rows_ * x;
    out.noalias() += quad_rows_.transpose() * (m * y);
}

void MomentFeatureMap::evaluate_rows(const Matrix& points, Matrix& out) const {
    const Index a = n_mean();
    const Index b = n_pinned();
    const Index q = n_quadratic();
    out.resize(points.rows(), output_dim());
    out.leftCols(a).noalias() = points * mean_rows_.transpose();
    out.middleCols(a, b).noalias() = points * pinned_rows_.transpose();
    if (q == 0) return;
    const Matrix y = points * quad_rows_.transpose();
    Index pos = a + b;
    for (Index r = 0; r < q; ++r) {
        for (Index c = r; c < q; ++c) out.col(pos++) = y.col(r).cwiseProduct(y.col(c));
    }
}

// ---------------------------------------------------------------------------
// ExpectationViews / MomentViews

ExpectationViews::ExpectationViews(std::shared_ptr<const FeatureMap> feature_map, Vector targets)
    : map_(std::move(feature_map)), targets_(std::move(targets)) {
    if (!map_) throw ValidationError("views: missing feature map");
    if (targets_.size() < 1) throw ValidationError("views: need at least one target");
    if (targets_.size() != map_->output_dim()) {
        throw ValidationError("views: " + std::to_string(targets_.size()) + " targets for " +
                              std::to_string(map_->output_dim()) + " features");
    }
    if (!targets_.allFinite()) throw ValidationError("views: non-finite targets");
}

MomentViews::MomentViews(Matrix gamma_mu, Vector mu_info, Matrix gamma_sigma, Matrix sigma2_info)
    : dim_(std::max(gamma_mu.cols(), gamma_sigma.cols())),
      gamma_mu_(std::move(gamma_mu)),
      mu_info_(std::move(mu_info)),
      gamma_sigma_(std::move(gamma_sigma)),
      sigma2_info_(std::move(sigma2_info)) {
    if (dim_ < 1) throw ValidationError("moment views: no variables");
    if (gamma_mu_.rows() == 0) gamma_mu_.resize(0, dim_);
    if (gamma_sigma_.rows() == 0) gamma_sigma_.resize(0, dim_);
    if (gamma_mu_.cols() != dim_ || gamma_sigma_.cols() != dim_) {
        throw ValidationError("moment views: gamma_mu and gamma_sigma have different column counts");
    }
    if (mu_info_.size() != gamma_mu_.rows()) throw ValidationError("moment views: mu_info length does not match gamma_mu rows");
    if (sigma2_info_.rows() != gamma_sigma_.rows() || sigma2_info_.cols() != gamma_sigma_.rows()) {
        throw ValidationError("moment views: sigma2_info shape does not match gamma_sigma rows");
    }
    if (gamma_mu_.rows() + gamma_sigma_.rows() == 0) throw ValidationError("moment views: no views");
    if (!gamma_mu_.allFinite() || !mu_info_.allFinite() || !gamma_sigma_.allFinite() || !sigma2_info_.allFinite()) {
        throw ValidationError("moment views: non-finite entries");
    }
    if (!linalg::has_full_row_rank(gamma_mu_)) throw ValidationError("gamma_mu not full row rank");
    if (!linalg::has_full_row_rank(gamma_sigma_)) throw ValidationError("gamma_sigma not full row rank");
    if (sigma2_info_.size() > 0) {
        if (!linalg::is_symmetric(sigma2_info_)) throw ValidationError("sigma2_info not symmetric");
        if (!linalg::is_positive_definite(sigma2_info_)) throw ValidationError("sigma2_info not positive definite");
        sigma2_info_ = linalg::symmetrize(sigma2_info_);
    }
}

// ---------------------------------------------------------------------------
// TiltedDensity

TiltedDensity::TiltedDensity(LogDensity base) : base_(std::move(base)) {
    if (base_.dim < 1 || !base_.value || !base_.gradient) {
        throw ValidationError("tilted density: base log-numerator needs dimension, value and gradient");
    }
}

TiltedDensity::TiltedDensity(LogDensity base, ExpectationViews views, Vector theta)
    : TiltedDensity(std::move(base)) {
    if (views.input_dim() != base_.dim) throw ValidationError("tilted density: views and numerator disagree on dimension");
    if (theta.size() != views.size()) throw ValidationError("tilted density: theta length does not match the views");
    if (!theta.allFinite()) throw ValidationError("tilted density: non-finite theta");
    views_.emplace(std::move(views));
    theta_ = std::move(theta);
}

LogDensity normal_log_numerator(const NormalParams& normal) {
    const auto llt = linalg::cholesky(normal.cov());
    if (!llt) throw ValidationError("cov not positive definite");
    const Matrix precision = llt->solve(Matrix::Identity(normal.dim(), normal.dim()));
    const Vector mean = normal.mean();
    LogDensity d;
    d.dim = normal.dim();
    d.value = [precision, mean](const Vector& x) {
        const Vector r = x - mean;
        return -0.5 * r.dot(precision * r);
    };
    d.gradient = [precision, mean](const Vector& x) -> Vector { return -(precision * (x - mean)); };
    d.start = mean;
    return d;
}

}  // namespace mre
