#include "mre/entropy_pooling.hpp"

#include "mre/diagnostics.hpp"
#include "mre/error.hpp"
#include "mre/kernels.hpp"
#include "mre/linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <string>

namespace mre {

namespace {

void check_probs(const Vector& p) {
    for (Index j = 0; j < p.size(); ++j) {
        if (!(p[j] > 0.0) || !std::isfinite(p[j])) {
            throw ValidationError("pooling: probability " + std::to_string(j) + " is not strictly positive");
        }
    }
}

void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw ValidationError(std::string(what) + " contains non-finite values");
}

// phi(theta) = ln sum_j p_j exp(theta' (zeta_j - eta)), whose gradient is the
// view residual under the tilted probabilities and whose Hessian is their
// feature covariance.
class Dual {
public:
    Dual(const Vector& p, const Matrix& features, const Vector& targets)
        : centered_(features.rowwise() - targets.transpose()),
          log_p_(p.array().log().matrix()),
          weights_(features.rows()),
          k_(features.cols()),
          kern_(kernels::active()) {}

    double value(const Vector& theta) {
        const auto J = static_cast<std::size_t>(centered_.rows());
        kern_.affine_logits(centered_.data(), J, k_, theta.data(), log_p_.data(), weights_.data());
        const double shift = kern_.max_value(weights_.data(), J);
        if (!std::isfinite(shift)) return std::numeric_limits<double>::infinity();
        sum_ = kern_.exp_shift_sum(weights_.data(), J, shift);
        return shift + std::log(sum_);
    }

    // Valid after value(); normalizes the weights in place.
    Vector probs() {
        weights_ /= sum_;
        sum_ = 1.0;
        return weights_;
    }

    Vector gradient() {
        normalize();
        Vector g(k_);
        kern_.weighted_first(centered_.data(), static_cast<std::size_t>(centered_.rows()), k_, weights_.data(),
                             g.data());
        return g;
    }

    Matrix hessian(const Vector& gradient) {
        normalize();
        Matrix h(k_, k_);
        kern_.weighted_centered_second(centered_.data(), static_cast<std::size_t>(centered_.rows()), k_,
                                       weights_.data(), gradient.data(), h.data());
        return h;
    }

private:
    void normalize() {
        if (sum_ != 1.0) {
            weights_ /= sum_;
            sum_ = 1.0;
        }
    }

    Matrix centered_;
    Vector log_p_;
    Vector weights_;
    double sum_ = 1.0;
    std::size_t k_;
    const kernels::KernelTable& kern_;
};

Matrix features_of(const WeightedScenarios& ws, const ExpectationViews& views) {
    if (ws.dim() != views.input_dim()) {
        throw ValidationError("pooling: scenarios have " + std::to_string(ws.dim()) + " variables, views expect " +
                              std::to_string(views.input_dim()));
    }
    return feature_matrix(ws.scenarios(), views.feature_map());
}

void check_theta(const Vector& theta, Index k) {
    if (theta.size() != k) {
        throw ValidationError("theta has length " + std::to_string(theta.size()) + ", expected " + std::to_string(k));
    }
    if (!theta.allFinite()) throw ValidationError("theta contains non-finite values");
}

// Solves (h + lambda I) d = -g, raising lambda until the factorization succeeds.
Vector newton_direction(const Matrix& h, const Vector& g) {
    const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    double lambda = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
        Matrix reg = h;
        reg.diagonal().array() += lambda;
        const auto llt = linalg::cholesky(reg);
        if (llt) {
            Vector d = -llt->solve(g);
            if (d.allFinite()) return d;
        }
        lambda = lambda == 0.0 ? 1e-12 * scale : lambda * 10.0;
    }
    return -g / scale;
}

}  // namespace

Matrix feature_matrix(const Matrix& scenarios, const FeatureMap& map) {
    if (scenarios.cols() != map.input_dim()) {
        throw ValidationError("feature map expects " + std::to_string(map.input_dim()) + " variables, scenarios have " +
                              std::to_string(scenarios.cols()));
    }
    Matrix out;
    map.evaluate_rows(scenarios, out);
    for (Index c = 0; c < out.cols(); ++c) {
        for (Index j = 0; j < out.rows(); ++j) {
            if (!std::isfinite(out(j, c))) {
                throw ValidationError("feature " + std::to_string(c) + " is not finite at scenario " + std::to_string(j));
            }
        }
    }
    return out;
}

Vector tilt_probabilities(const Vector& p, const Matrix& features, const Vector& theta) {
    if (features.rows() != p.size()) {
        throw ValidationError("tilt: " + std::to_string(features.rows()) + " feature rows for " +
                              std::to_string(p.size()) + " probabilities");
    }
    check_probs(p);
    check_theta(theta, features.cols());
    check_finite(features, "features");
    Dual d(p, features, Vector::Zero(features.cols()));
    d.value(theta);
    return d.probs();
}

double dual_objective(const Vector& theta, const WeightedScenarios& ws, const ExpectationViews& views) {
    const Matrix f = features_of(ws, views);
    check_theta(theta, f.cols());
    Dual d(ws.probs(), f, views.targets());
    return d.value(theta);
}

Vector dual_gradient(const Vector& theta, const WeightedScenarios& ws, const ExpectationViews& views) {
    const Matrix f = features_of(ws, views);
    check_theta(theta, f.cols());
    Dual d(ws.probs(), f, views.targets());
    d.value(theta);
    return d.gradient();
}

Matrix dual_hessian(const Vector& theta, const WeightedScenarios& ws, const ExpectationViews& views) {
    const Matrix f = features_of(ws, views);
    check_theta(theta, f.cols());
    Dual d(ws.probs(), f, views.targets());
    d.value(theta);
    const Vector g = d.gradient();
    return d.hessian(g);
}

PoolingResult entropy_pool(const WeightedScenarios& ws, const ExpectationViews& views, const PoolingConfig& config) {
    return entropy_pool(ws.probs(), features_of(ws, views), views.targets(), config);
}

PoolingResult entropy_pool(const Vector& p, const Matrix& features, const Vector& targets,
                           const PoolingConfig& config) {
    if (features.rows() != p.size()) {
        throw ValidationError("pooling: " + std::to_string(features.rows()) + " feature rows for " +
                              std::to_string(p.size()) + " probabilities");
    }
    if (targets.size() != features.cols()) {
        throw ValidationError("pooling: " + std::to_string(targets.size()) + " targets for " +
                              std::to_string(features.cols()) + " features");
    }
    if (!(config.tol > 0.0) || config.max_iter < 1 || !(config.theta_cap > 0.0)) {
        throw ValidationError("pooling: tol, max_iter and theta_cap must be positive");
    }
    check_probs(p);
    check_finite(features, "features");
    if (!targets.allFinite()) throw ValidationError("pooling: targets contain non-finite values");

    const Index k = features.cols();
    Dual dual(p, features, targets);
    Vector theta = Vector::Zero(k);
    double f = dual.value(theta);
    Vector g = dual.gradient();

    int iter = 0;
    for (;; ++iter) {
        const double gnorm = k > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
        if (gnorm < config.tol) break;
        if (iter == config.max_iter) {
            throw ConvergenceError("pooling: no convergence in " + std::to_string(config.max_iter) +
                                       " Newton iterations (residual " + std::to_string(gnorm) + ")",
                                   iter, gnorm);
        }
        const Vector dir = newton_direction(dual.hessian(g), g);
        const double slope = g.dot(dir);
        // Near the optimum the objective is flat to rounding; allow for that.
        const double slack = 1e-14 * std::max(1.0, std::abs(f));
        double t = 1.0;
        bool accepted = false;
        Vector trial;
        double ft = f;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            trial = theta + t * dir;
            ft = dual.value(trial);
            if (std::isfinite(ft) && ft <= f + 1e-4 * t * slope + slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (theta.cwiseAbs().maxCoeff() > 0.1 * config.theta_cap) {
                throw InfeasibleError("pooling: targets not attainable with positive probabilities (multipliers diverge)");
            }
            throw ConvergenceError("pooling: line search failed (residual " + std::to_string(gnorm) + ")", iter, gnorm);
        }
        theta = trial;
        f = ft;
        g = dual.gradient();
        if (theta.cwiseAbs().maxCoeff() > config.theta_cap) {
            throw InfeasibleError("pooling: targets not attainable with positive probabilities (|theta| exceeded " +
                                  std::to_string(config.theta_cap) + ")");
        }
    }

    // One full Newton step past the tolerance; kept only if it helps.
    if (k > 0 && g.cwiseAbs().maxCoeff() > 0.0) {
        const Vector before = g;
        const Vector trial = theta + newton_direction(dual.hessian(g), g);
        const double ft = dual.value(trial);
        const Vector gt = dual.gradient();
        if (std::isfinite(ft) && gt.cwiseAbs().maxCoeff() < before.cwiseAbs().maxCoeff()) {
            theta = trial;
        } else {
            dual.value(theta);
        }
    }

    PoolingResult out;
    out.probs_updated = dual.probs();
    for (Index j = 0; j < out.probs_updated.size(); ++j) {
        if (!(out.probs_updated[j] > 0.0)) {
            throw InfeasibleError("pooling: solution puts zero probability on scenario " + std::to_string(j));
        }
    }
    out.theta_hat = theta;
    out.residual_norm = k > 0 ? (features.transpose() * out.probs_updated - targets).cwiseAbs().maxCoeff() : 0.0;
    out.ens_value = ens(out.probs_updated, p);
    out.iterations = iter;
    return out;
}

}  // namespace mre
