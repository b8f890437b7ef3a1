#include "mre/hmc.hpp"

#include "mre/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace mre {

namespace {

double raw_value(const TiltedDensity& td, const Vector& x) {
    double u = td.base().value(x);
    if (td.views()) u += td.theta().dot(td.views()->feature_map()(x));
    return u;
}

Vector raw_gradient(const TiltedDensity& td, const Vector& x) {
    Vector g = td.base().gradient(x);
    if (td.views()) {
        Vector jt(td.dim());
        td.views()->feature_map().jacobian_transpose_times(x, td.theta(), jt);
        g += jt;
    }
    return g;
}

std::string describe(const Vector& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

void check_point(const TiltedDensity& td, const Vector& x) {
    if (x.size() != td.dim()) {
        throw ValidationError("point has length " + std::to_string(x.size()) + ", density has dimension " +
                              std::to_string(td.dim()));
    }
}

struct Trajectory {
    Vector x;
    Vector p;
    Vector grad;
    bool finite = true;
};

// Leapfrog with the gradient at the start supplied, so accepted states can reuse it.
Trajectory integrate(const TiltedDensity& td, Vector x, Vector p, Vector grad, double eps, int n) {
    p.noalias() += 0.5 * eps * grad;
    for (int s = 0; s < n; ++s) {
        x.noalias() += eps * p;
        grad = raw_gradient(td, x);
        if (!grad.allFinite() || !x.allFinite()) return {std::move(x), std::move(p), std::move(grad), false};
        p.noalias() += (s + 1 == n ? 0.5 : 1.0) * eps * grad;
    }
    const bool ok = p.allFinite();
    return {std::move(x), std::move(p), std::move(grad), ok};
}

// Dual averaging of log(step) toward a target acceptance probability.
struct StepAdapter {
    double mu;
    double target;
    double h_bar = 0.0;
    double log_eps = 0.0;
    double log_eps_bar = 0.0;
    int m = 0;

    StepAdapter(double eps0, double target_accept) : mu(std::log(10.0 * eps0)), target(target_accept), log_eps(std::log(eps0)) {}

    double update(double accept_prob) {
        constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
        ++m;
        const double w = 1.0 / (m + t0);
        h_bar = (1.0 - w) * h_bar + w * (target - accept_prob);
        log_eps = mu - std::sqrt(static_cast<double>(m)) / gamma * h_bar;
        const double eta = std::pow(static_cast<double>(m), -kappa);
        log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
        return std::exp(log_eps);
    }

    double final_step() const { return std::exp(log_eps_bar); }
};

}  // namespace

void HmcConfig::validate() const {
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ValidationError("hmc: step_size must be positive");
    if (n_leapfrog < 1) throw ValidationError("hmc: n_leapfrog must be at least 1");
    if (n_samples < 2) throw ValidationError("hmc: n_samples must be at least 2");
    if (n_burnin < 0) throw ValidationError("hmc: n_burnin must be non-negative");
    if (thin < 1) throw ValidationError("hmc: thin must be at least 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw ValidationError("hmc: target_accept must be in (0, 1)");
    if (!(step_jitter >= 0.0 && step_jitter < 1.0)) throw ValidationError("hmc: step_jitter must be in [0, 1)");
}

double log_density(const TiltedDensity& td, const Vector& x) {
    check_point(td, x);
    const double u = raw_value(td, x);
    if (!std::isfinite(u)) throw NumericalError("log-density is not finite at x = " + describe(x));
    return u;
}

Vector log_density_gradient(const TiltedDensity& td, const Vector& x) {
    check_point(td, x);
    Vector g = raw_gradient(td, x);
    if (!g.allFinite()) throw NumericalError("log-density gradient is not finite at x = " + describe(x));
    return g;
}

LeapfrogState leapfrog(const TiltedDensity& td, Vector x, Vector momentum, double step_size, int n_steps) {
    check_point(td, x);
    if (momentum.size() != x.size()) throw ValidationError("leapfrog: momentum and position lengths differ");
    if (n_steps < 0) throw ValidationError("leapfrog: negative step count");
    if (!x.allFinite() || !momentum.allFinite()) return {std::move(x), std::move(momentum), false};
    Vector grad = raw_gradient(td, x);
    if (!grad.allFinite()) return {std::move(x), std::move(momentum), false};
    if (n_steps == 0) return {std::move(x), std::move(momentum), true};
    auto t = integrate(td, std::move(x), std::move(momentum), std::move(grad), step_size, n_steps);
    return {std::move(t.x), std::move(t.p), t.finite};
}

HmcResult sample(const TiltedDensity& td, const HmcConfig& cfg) {
    const Vector x0 = td.base().start ? *td.base().start : Vector::Zero(td.dim());
    return sample(td, cfg, x0);
}

HmcResult sample(const TiltedDensity& td, const HmcConfig& cfg, const Vector& x0) {
    cfg.validate();
    check_point(td, x0);
    const Index n = td.dim();

    Vector x = x0;
    double u = log_density(td, x);
    Vector grad = log_density_gradient(td, x);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double eps = cfg.step_size;
    StepAdapter adapter(cfg.step_size, cfg.target_accept);

    Matrix draws(cfg.n_samples, n);
    Index stored = 0;
    long burn_accepts = 0, post_accepts = 0;
    int divergences = 0;
    const long total = cfg.n_burnin + static_cast<long>(cfg.n_samples) * cfg.thin;
    Vector p(n);

    for (long it = 0; it < total; ++it) {
        const bool burning = it < cfg.n_burnin;
        double eps_it = eps;
        if (cfg.step_jitter > 0.0) eps_it *= 1.0 + cfg.step_jitter * (2.0 * unif(rng) - 1.0);
        for (Index i = 0; i < n; ++i) p[i] = normal(rng);

        const double h0 = -u + 0.5 * p.squaredNorm();
        auto t = integrate(td, x, p, grad, eps_it, cfg.n_leapfrog);
        double accept_prob = 0.0;
        double u_new = 0.0;
        if (t.finite) {
            u_new = raw_value(td, t.x);
            const double h1 = -u_new + 0.5 * t.p.squaredNorm();
            if (std::isfinite(h1)) accept_prob = std::min(1.0, std::exp(h0 - h1));
        }
        if (!t.finite || !std::isfinite(u_new)) ++divergences;
        const bool accept = unif(rng) < accept_prob;
        if (accept) {
            x = std::move(t.x);
            grad = std::move(t.grad);
            u = u_new;
        }

        if (burning) {
            burn_accepts += accept;
            if (cfg.adapt) eps = adapter.update(accept_prob);
            if (it + 1 == cfg.n_burnin) {
                if (cfg.adapt) eps = adapter.final_step();
                const double rate = static_cast<double>(burn_accepts) / cfg.n_burnin;
                if (rate < 0.05) {
                    throw TuningError("hmc: burn-in acceptance rate " + std::to_string(rate) +
                                          " below 0.05 (step size " + std::to_string(eps) + ")",
                                      rate, eps);
                }
            }
            continue;
        }
        post_accepts += accept;
        const long post = it - cfg.n_burnin;
        if ((post + 1) % cfg.thin == 0) draws.row(stored++) = x.transpose();
    }

    HmcResult out{WeightedScenarios::uniform(std::move(draws))};
    out.acceptance_rate = static_cast<double>(post_accepts) / (static_cast<double>(cfg.n_samples) * cfg.thin);
    out.burnin_acceptance = cfg.n_burnin > 0 ? static_cast<double>(burn_accepts) / cfg.n_burnin : 0.0;
    out.step_size = eps;
    out.divergences = divergences;
    return out;
}

double effective_sample_size(const Vector& chain) {
    const Index n = chain.size();
    if (n < 4) return static_cast<double>(n);
    const Vector c = chain.array() - chain.mean();
    const double var0 = c.squaredNorm() / n;
    if (!(var0 > 0.0)) return static_cast<double>(n);

    auto rho = [&](Index lag) { return c.head(n - lag).dot(c.tail(n - lag)) / (n * var0); };

    // Sum of consecutive autocorrelation pairs while positive, forced non-increasing.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (Index lag = 0; lag + 1 < n; lag += 2) {
        double pair = rho(lag) + rho(lag + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

}  // namespace mre
