#include "mre/iterative.hpp"

#include "mre/diagnostics.hpp"
#include "mre/error.hpp"
#include "mre/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace mre {

void IterativeConfig::validate() const {
    if (n_scenarios < 2) throw ValidationError("iterative: n_scenarios must be at least 2");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("iterative: delta must be in (0, 1)");
    if (max_outer < 1) throw ValidationError("iterative: max_outer must be at least 1");
    if (max_halvings < 0) throw ValidationError("iterative: max_halvings must be non-negative");
    hmc.validate();
}

TiltedDensity update_numerator(const LogDensity& base, const Vector& theta_hat, const ExpectationViews& views) {
    return TiltedDensity(base, views, theta_hat);
}

LogDensity flatten(const TiltedDensity& td) {
    if (!td.views()) return td.base();
    LogDensity out;
    out.dim = td.dim();
    out.start = td.base().start;
    out.value = [td](const Vector& x) { return td.base().value(x) + td.theta().dot(td.views()->feature_map()(x)); };
    out.gradient = [td](const Vector& x) -> Vector {
        Vector jt(td.dim());
        td.views()->feature_map().jacobian_transpose_times(x, td.theta(), jt);
        return td.base().gradient(x) + jt;
    };
    return out;
}

bool converged(const Vector& p_bar, const Vector& p_uniform, double delta) {
    return ens(p_bar, p_uniform) > 1.0 - delta;
}

namespace {

[[noreturn]] void rethrow_with_step(int step) {
    const std::string prefix = "step " + std::to_string(step) + ": ";
    try {
        throw;
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(prefix + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(prefix + e.what(), e.iterations(), e.last_residual());
    } catch (const TuningError& e) {
        throw TuningError(prefix + e.what(), e.acceptance_rate(), e.step_size());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(prefix + e.what());
    }
}

// Negative definite finite-difference Hessian of the tilted log-density at x.
bool concave_at(const TiltedDensity& td, const Vector& x) {
    const Index n = td.dim();
    Matrix h(n, n);
    Vector jt(n);
    auto grad = [&](const Vector& y) -> Vector {
        td.views()->feature_map().jacobian_transpose_times(y, td.theta(), jt);
        return td.base().gradient(y) + jt;
    };
    for (Index i = 0; i < n; ++i) {
        const double step = 1e-5 * std::max(1.0, std::abs(x[i]));
        Vector xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        h.col(i) = (grad(xp) - grad(xm)) / (2.0 * step);
    }
    if (!h.allFinite()) return false;
    return linalg::is_positive_definite(-0.5 * (h + h.transpose()));
}

}  // namespace

IterativeResult run(const LogDensity& base, const ExpectationViews& views, const IterativeConfig& cfg) {
    cfg.validate();
    if (views.input_dim() != base.dim) {
        throw ValidationError("iterative: views expect " + std::to_string(views.input_dim()) +
                              " variables, numerator has " + std::to_string(base.dim));
    }
    if (cfg.reference && cfg.reference->dim() != base.dim) {
        throw ValidationError("iterative: reference moments have the wrong dimension");
    }

    const Index k = views.size();
    Vector theta = Vector::Zero(k);
    TiltedDensity numerator = update_numerator(base, theta, views);
    IterationTrace trace;

    for (int step = 1; step <= cfg.max_outer; ++step) {
        HmcConfig hcfg = cfg.hmc;
        hcfg.n_samples = cfg.n_scenarios;
        hcfg.seed = cfg.hmc.seed + static_cast<std::uint64_t>(step);

        std::optional<HmcResult> draws;
        PoolingResult pooled;
        try {
            draws.emplace(sample(numerator, hcfg));
            const Matrix features = feature_matrix(draws->scenarios.scenarios(), views.feature_map());
            pooled = entropy_pool(draws->scenarios.probs(), features, views.targets(), cfg.pool);
        } catch (const Error&) {
            rethrow_with_step(step);
        }

        WeightedScenarios ws = draws->scenarios.with_probs(pooled.probs_updated);
        auto [mean, cov] = weighted_moments(ws);

        double damping = 1.0;
        Vector next = theta + pooled.theta_hat;
        if (cfg.damp_improper) {
            int halvings = 0;
            while (!concave_at(update_numerator(base, next, views), mean)) {
                if (++halvings > cfg.max_halvings) {
                    throw NumericalError("step " + std::to_string(step) +
                                         ": updated numerator is not concave even after damping the multipliers");
                }
                damping *= 0.5;
                next = theta + damping * pooled.theta_hat;
            }
        }
        theta = next;
        numerator = update_numerator(base, theta, views);

        IterationRecord rec;
        rec.step = step;
        rec.ens = pooled.ens_value;
        if (cfg.reference) {
            rec.mean_error = (mean - cfg.reference->mean()).norm();
            rec.cov_error = (cov - cfg.reference->cov()).norm();
        } else {
            auto [m0, c0] = weighted_moments(draws->scenarios);
            rec.mean_error = (mean - m0).norm();
            rec.cov_error = (cov - c0).norm();
        }
        rec.delta_theta_norm = pooled.theta_hat.norm();
        rec.damping = damping;
        rec.acceptance_rate = draws->acceptance_rate;
        rec.step_size = draws->step_size;
        rec.theta = theta;
        rec.weighted_mean = std::move(mean);
        rec.weighted_cov = std::move(cov);
        trace.push_back(std::move(rec));

        const bool done = converged(pooled.probs_updated, draws->scenarios.probs(), cfg.delta);
        if (done || step == cfg.max_outer) {
            return IterativeResult{std::move(ws), theta, numerator, std::move(trace), done};
        }
    }
    // Unreachable: the loop returns on its last step.
    throw ConvergenceError("iterative: no steps run", 0, 0.0);
}

}  // namespace mre
