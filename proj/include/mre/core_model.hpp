#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace mre {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Mean vector and covariance matrix of a multivariate normal.
///
/// Percentages are stored as decimals throughout (10% is 0.10).
class NormalParams {
public:
    /// Throws ValidationError unless cov is square, matches mean, is symmetric
    /// (1e-12 relative) and has a successful Cholesky factorization.
    NormalParams(Vector mean, Matrix cov);

    const Vector& mean() const noexcept { return mean_; }
    const Matrix& cov() const noexcept { return cov_; }
    Index dim() const noexcept { return mean_.size(); }

    Vector std_devs() const;
    Matrix correlation() const;

private:
    Vector mean_;
    Matrix cov_;
};

/// Natural coordinates of a normal: theta_mu = inv(cov) * mean and
/// theta_sigma = -inv(cov) / 2 (kept as a matrix, not vectorized).
class CanonicalNormal {
public:
    /// Throws ValidationError unless theta_sigma is symmetric negative definite.
    CanonicalNormal(Vector theta_mu, Matrix theta_sigma);

    const Vector& theta_mu() const noexcept { return theta_mu_; }
    const Matrix& theta_sigma() const noexcept { return theta_sigma_; }
    Index dim() const noexcept { return theta_mu_.size(); }

private:
    Vector theta_mu_;
    Matrix theta_sigma_;
};

/// J joint scenarios (rows of `scenarios`) with strictly positive probabilities.
class WeightedScenarios {
public:
    /// Throws ValidationError unless J >= 2, n >= 1, every prob > 0 and the
    /// probabilities sum to one within 1e-12.
    WeightedScenarios(Matrix scenarios, Vector probs);

    /// Equally weighted scenarios, 1/J each.
    static WeightedScenarios uniform(Matrix scenarios);

    const Matrix& scenarios() const noexcept { return scenarios_; }
    const Vector& probs() const noexcept { return probs_; }
    Index size() const noexcept { return scenarios_.rows(); }
    Index dim() const noexcept { return scenarios_.cols(); }

    /// Same scenarios, new probabilities (validated).
    WeightedScenarios with_probs(Vector probs) const;

private:
    Matrix scenarios_;
    Vector probs_;
};

/// Feature map zeta: R^n -> R^k defining expectation views E[zeta(X)] = eta.
///
/// Implementations must be pure functions of x so that one map can be shared
/// across threads.
class FeatureMap {
public:
    virtual ~FeatureMap() = default;

    virtual Index input_dim() const = 0;
    virtual Index output_dim() const = 0;

    virtual void evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const = 0;

    /// True when jacobian() is analytic rather than a finite-difference fallback.
    virtual bool has_jacobian() const { return false; }

    /// k x n Jacobian. The default uses central differences.
    virtual void jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const;

    /// J_zeta(x)' * theta; overridden where the structure allows skipping the full Jacobian.
    virtual void jacobian_transpose_times(const Eigen::Ref<const Vector>& x,
                                          const Eigen::Ref<const Vector>& theta,
                                          Eigen::Ref<Vector> out) const;

    /// Evaluates every row of `points` (J x n) into `out` (J x k).
    virtual void evaluate_rows(const Matrix& points, Matrix& out) const;

    Vector operator()(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;
};

/// Features built from std::function objects; the Jacobian is optional.
class CallableFeatureMap final : public FeatureMap {
public:
    using Eval = std::function<Vector(const Vector&)>;
    using Jac = std::function<Matrix(const Vector&)>;

    CallableFeatureMap(Index input_dim, Index output_dim, Eval eval, Jac jac = {});

    Index input_dim() const override { return n_; }
    Index output_dim() const override { return k_; }
    void evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
    bool has_jacobian() const override { return static_cast<bool>(jac_); }
    void jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const override;
    using FeatureMap::jacobian;

private:
    Index n_;
    Index k_;
    Eval eval_;
    Jac jac_;
};

/// One polynomial feature of degree <= 2: c + a'x + x'Qx (Q stored symmetrized).
struct QuadraticFeature {
    double constant = 0.0;
    Vector linear;     // length n, may be empty (zero)
    Matrix quadratic;  // n x n, may be empty (zero)
};

/// Features that are each a polynomial of degree at most two.
class PolynomialFeatureMap final : public FeatureMap {
public:
    PolynomialFeatureMap(Index input_dim, std::vector<QuadraticFeature> features);

    Index input_dim() const override { return n_; }
    Index output_dim() const override { return static_cast<Index>(features_.size()); }
    void evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
    bool has_jacobian() const override { return true; }
    void jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const override;
    using FeatureMap::jacobian;

    const std::vector<QuadraticFeature>& features() const noexcept { return features_; }

private:
    Index n_;
    std::vector<QuadraticFeature> features_;
};

/// Linear and quadratic features produced by expand_moment_views:
///   zeta(x) = (A x, B x, upper(y y')) with y = C x,
/// where the upper-triangular products are listed row by row (a <= b).
class MomentFeatureMap final : public FeatureMap {
public:
    MomentFeatureMap(Matrix linear_mean_rows, Matrix linear_pinned_rows, Matrix quadratic_rows);

    Index input_dim() const override { return n_; }
    Index output_dim() const override;
    void evaluate(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
    bool has_jacobian() const override { return true; }
    void jacobian(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const override;
    using FeatureMap::jacobian;
    void jacobian_transpose_times(const Eigen::Ref<const Vector>& x,
                                  const Eigen::Ref<const Vector>& theta,
                                  Eigen::Ref<Vector> out) const override;
    void evaluate_rows(const Matrix& points, Matrix& out) const override;

    const Matrix& mean_rows() const noexcept { return mean_rows_; }
    const Matrix& pinned_rows() const noexcept { return pinned_rows_; }
    const Matrix& quadratic_rows() const noexcept { return quad_rows_; }

    Index n_mean() const noexcept { return mean_rows_.rows(); }
    Index n_pinned() const noexcept { return pinned_rows_.rows(); }
    Index n_quadratic() const noexcept { return quad_rows_.rows(); }

private:
    Index n_;
    Matrix mean_rows_;
    Matrix pinned_rows_;
    Matrix quad_rows_;
};

/// Expectation views E[zeta(X)] = targets.
class ExpectationViews {
public:
    ExpectationViews(std::shared_ptr<const FeatureMap> feature_map, Vector targets);

    const FeatureMap& feature_map() const noexcept { return *map_; }
    const std::shared_ptr<const FeatureMap>& feature_map_ptr() const noexcept { return map_; }
    const Vector& targets() const noexcept { return targets_; }
    Index size() const noexcept { return targets_.size(); }
    Index input_dim() const { return map_->input_dim(); }

private:
    std::shared_ptr<const FeatureMap> map_;
    Vector targets_;
};

/// Views on linear combinations of means (gamma_mu X has mean mu_info) and of
/// covariances (gamma_sigma X has covariance sigma2_info). Either block may be
/// empty (zero rows).
class MomentViews {
public:
    /// Throws ValidationError on inconsistent shapes, rank-deficient gammas
    /// (smallest singular value <= 1e-10 * largest) or a sigma2_info that is
    /// not symmetric positive definite.
    MomentViews(Matrix gamma_mu, Vector mu_info, Matrix gamma_sigma, Matrix sigma2_info);

    const Matrix& gamma_mu() const noexcept { return gamma_mu_; }
    const Vector& mu_info() const noexcept { return mu_info_; }
    const Matrix& gamma_sigma() const noexcept { return gamma_sigma_; }
    const Matrix& sigma2_info() const noexcept { return sigma2_info_; }

    Index dim() const noexcept { return dim_; }
    Index k_mu() const noexcept { return gamma_mu_.rows(); }
    Index k_sigma() const noexcept { return gamma_sigma_.rows(); }

private:
    Index dim_;
    Matrix gamma_mu_;
    Vector mu_info_;
    Matrix gamma_sigma_;
    Matrix sigma2_info_;
};

/// Unnormalized log-density with gradient. `start` is a suggested starting
/// point for samplers (the mean for normal numerators).
struct LogDensity {
    Index dim = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::optional<Vector> start;
};

/// ln g(x) + theta' zeta(x). Without views the tilt is identically one.
class TiltedDensity {
public:
    explicit TiltedDensity(LogDensity base);
    TiltedDensity(LogDensity base, ExpectationViews views, Vector theta);

    const LogDensity& base() const noexcept { return base_; }
    const std::optional<ExpectationViews>& views() const noexcept { return views_; }
    const Vector& theta() const noexcept { return theta_; }
    Index dim() const noexcept { return base_.dim; }

private:
    LogDensity base_;
    std::optional<ExpectationViews> views_;
    Vector theta_;
};

/// Per-step diagnostics of the iterative algorithm.
struct IterationRecord {
    int step = 0;
    double ens = 1.0;
    double mean_error = 0.0;
    double cov_error = 0.0;
    double delta_theta_norm = 0.0;
    double damping = 1.0;   // fraction of the pooled increment added to theta
    double acceptance_rate = 0.0;
    double step_size = 0.0;
    Vector theta;           // accumulated multipliers after this step
    Vector weighted_mean;   // moments of the pooled scenarios of this step
    Matrix weighted_cov;
};

using IterationTrace = std::vector<IterationRecord>;

/// Log-numerator of N(mean, cov) without the normalizing constant.
LogDensity normal_log_numerator(const NormalParams& normal);

}  // namespace mre
