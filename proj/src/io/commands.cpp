#include "mre/cli.hpp"

#include "mre/analytic_normal.hpp"
#include "mre/case_study.hpp"
#include "mre/diagnostics.hpp"
#include "mre/entropy_pooling.hpp"
#include "mre/error.hpp"
#include "mre/hmc.hpp"
#include "mre/iterative.hpp"
#include "mre/kernels.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace mre::cli {

using io::json;
using io::to_json;

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

const NormalParams& require_base(const io::Config& cfg, const char* cmd) {
    if (!cfg.base_normal) throw ValidationError(std::string(cmd) + ": config needs base.mean and base.cov (or base.std)");
    return *cfg.base_normal;
}

json moments_json(const Vector& mean, const Matrix& cov) {
    const Vector sd = cov.diagonal().cwiseSqrt();
    const Matrix corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    return {{"mean", to_json(mean)}, {"cov", to_json(cov)}, {"std", to_json(sd)}, {"corr", to_json(corr)}};
}

std::filesystem::path report_path(const io::Config& cfg) {
    return cfg.out_dir / (cfg.format == "csv" ? "report.csv" : "report.json");
}

io::RunReport start_report(const io::Config& cfg, const char* mode) {
    io::RunReport r;
    r.mode = mode;
    r.seed = cfg.seed;
    r.config = cfg.echo();
    return r;
}

void finish(io::RunReport& r, const io::Config& cfg, clock::time_point t0) {
    r.elapsed_seconds = seconds_since(t0);
    const auto path = report_path(cfg);
    r.artifacts["report"] = path.string();
    io::write_report(path, r, cfg.format);
}

// Ellipse rows: label, i, j (1-based), point index, x, y.
void append_ellipses(Matrix& rows, std::vector<std::string>& labels, const std::string& label, const Vector& mean,
                     const Matrix& cov, const std::vector<std::pair<int, int>>& pairs, int points) {
    for (const auto& [i, j] : pairs) {
        const Matrix pts = ellipse_points(mean, cov, i - 1, j - 1, points);
        const Index start = rows.rows();
        rows.conservativeResize(start + pts.rows(), 5);
        for (Index t = 0; t < pts.rows(); ++t) {
            rows.row(start + t) << i, j, static_cast<double>(t), pts(t, 0), pts(t, 1);
            labels.push_back(label);
        }
    }
}

void write_ellipses(const std::filesystem::path& path, const Matrix& rows, const std::vector<std::string>& labels) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "label,i,j,point,x,y\n";
    out.precision(17);
    for (Index r = 0; r < rows.rows(); ++r) {
        out << labels[static_cast<std::size_t>(r)] << ',' << static_cast<int>(rows(r, 0)) << ','
            << static_cast<int>(rows(r, 1)) << ',' << static_cast<int>(rows(r, 2)) << ',' << rows(r, 3) << ','
            << rows(r, 4) << '\n';
    }
}

// Expectation views for the sampling-based commands: raw features, or moment
// views with the gamma_sigma means pinned (explicitly, or at `fallback`).
ExpectationViews expectation_views(const io::Config& cfg, Index dim, const Vector& fallback_pin) {
    if (auto fv = cfg.feature_views(dim)) return *fv;
    if (!cfg.moment_views) throw ValidationError("config needs views (moment blocks or features)");
    return expand_moment_views(*cfg.moment_views, cfg.pinned_mean ? *cfg.pinned_mean : fallback_pin);
}

}  // namespace

io::RunReport cmd_analytic(const io::Config& cfg) {
    const auto t0 = clock::now();
    const NormalParams& base = require_base(cfg, "analytic");
    if (!cfg.moment_views) throw ValidationError("analytic: config needs moment views (gamma_mu / gamma_sigma)");
    const auto sol = solve_moment_views(base, *cfg.moment_views);

    auto r = start_report(cfg, "analytic");
    r.outputs["updated"] = moments_json(sol.updated.mean(), sol.updated.cov());
    r.outputs["theta_mu_info"] = to_json(sol.theta_mu_info);
    r.outputs["theta_sigma_info"] = to_json(sol.theta_sigma_info);
    r.outputs["eta_sigma_info"] = to_json(sol.eta_sigma_info);
    r.outputs["mu_shift"] = to_json(sol.mu_shift);
    r.outputs["relative_entropy"] = relative_entropy_normal(sol.updated, base);

    if (!cfg.ellipse_pairs.empty()) {
        Matrix rows(0, 5);
        std::vector<std::string> labels;
        append_ellipses(rows, labels, "base", base.mean(), base.cov(), cfg.ellipse_pairs, cfg.ellipse_points);
        append_ellipses(rows, labels, "updated", sol.updated.mean(), sol.updated.cov(), cfg.ellipse_pairs,
                        cfg.ellipse_points);
        const auto path = cfg.out_dir / "ellipses.csv";
        write_ellipses(path, rows, labels);
        r.artifacts["ellipses"] = path.string();
    }
    finish(r, cfg, t0);
    return r;
}

io::RunReport cmd_pool(const io::Config& cfg) {
    const auto t0 = clock::now();
    if (!cfg.scenarios_path) throw ValidationError("pool: config needs base.scenarios (CSV path)");
    const WeightedScenarios ws = io::read_scenarios_csv(*cfg.scenarios_path);
    const Vector current = weighted_moments(ws).first;
    const ExpectationViews views = expectation_views(cfg, ws.dim(), current);
    const PoolingResult res = entropy_pool(ws, views, cfg.pool);
    const WeightedScenarios pooled = ws.with_probs(res.probs_updated);
    const auto [mean, cov] = weighted_moments(pooled);

    auto r = start_report(cfg, "pool");
    r.outputs["theta_hat"] = to_json(res.theta_hat);
    r.outputs["ens"] = res.ens_value;
    r.outputs["residual_norm"] = res.residual_norm;
    r.outputs["iterations"] = res.iterations;
    r.outputs["targets"] = to_json(views.targets());
    r.outputs["updated"] = moments_json(mean, cov);

    const auto path = cfg.out_dir / "pooled_scenarios.csv";
    io::write_scenarios_csv(path, pooled);
    r.artifacts["scenarios"] = path.string();
    finish(r, cfg, t0);
    return r;
}

io::RunReport cmd_iterative(const io::Config& cfg) {
    const auto t0 = clock::now();
    const NormalParams& base = require_base(cfg, "iterative");
    IterativeConfig icfg = cfg.iterative;
    icfg.pool = cfg.pool;
    icfg.hmc.seed = cfg.seed;

    std::optional<NormalMreSolution> analytic;
    if (cfg.moment_views && cfg.features.empty()) {
        analytic = solve_moment_views(base, *cfg.moment_views);
        icfg.reference = analytic->updated;
    }
    const ExpectationViews views =
        expectation_views(cfg, base.dim(), analytic ? analytic->updated.mean() : base.mean());
    const IterativeResult res = run(normal_log_numerator(base), views, icfg);
    const auto [mean, cov] = weighted_moments(res.scenarios);

    auto r = start_report(cfg, "iterative");
    r.outputs["converged"] = res.converged;
    r.outputs["steps"] = res.trace.size();
    r.outputs["theta_info_hat"] = to_json(res.theta_info_hat);
    r.outputs["trace"] = io::trace_to_json(res.trace);
    r.outputs["final"] = moments_json(mean, cov);
    r.outputs["final_ens"] = res.trace.back().ens;
    r.outputs["residual_norm"] = view_residual(res.scenarios, views).cwiseAbs().maxCoeff();
    r.outputs["targets"] = to_json(views.targets());
    if (analytic) r.outputs["analytic"] = moments_json(analytic->updated.mean(), analytic->updated.cov());

    const auto scen = cfg.out_dir / "scenarios.csv";
    io::write_scenarios_csv(scen, res.scenarios);
    r.artifacts["scenarios"] = scen.string();
    const auto probs = cfg.out_dir / "probabilities.csv";
    io::write_matrix_csv(probs, res.scenarios.probs(), {"prob"});
    r.artifacts["probabilities"] = probs.string();
    const auto trace = cfg.out_dir / "trace.csv";
    io::write_trace_csv(trace, res.trace);
    r.artifacts["trace"] = trace.string();

    std::vector<std::pair<int, int>> pairs = cfg.ellipse_pairs;
    if (pairs.empty() && base.dim() >= 2) pairs.emplace_back(1, 2);
    if (!pairs.empty()) {
        Matrix rows(0, 5);
        std::vector<std::string> labels;
        append_ellipses(rows, labels, "base", base.mean(), base.cov(), pairs, cfg.ellipse_points);
        for (const auto& rec : res.trace) {
            append_ellipses(rows, labels, "step" + std::to_string(rec.step), rec.weighted_mean, rec.weighted_cov,
                            pairs, cfg.ellipse_points);
        }
        if (analytic) {
            append_ellipses(rows, labels, "analytic", analytic->updated.mean(), analytic->updated.cov(), pairs,
                            cfg.ellipse_points);
        }
        const auto path = cfg.out_dir / "ellipses.csv";
        write_ellipses(path, rows, labels);
        r.artifacts["ellipses"] = path.string();
    }
    finish(r, cfg, t0);
    return r;
}

io::RunReport cmd_sample(const io::Config& cfg) {
    const auto t0 = clock::now();
    const NormalParams& base = require_base(cfg, "sample");
    HmcConfig hcfg = cfg.iterative.hmc;
    hcfg.seed = cfg.seed;

    std::optional<TiltedDensity> td;
    if (cfg.theta) {
        const ExpectationViews views = expectation_views(cfg, base.dim(), base.mean());
        td.emplace(normal_log_numerator(base), views, *cfg.theta);
    } else {
        td.emplace(normal_log_numerator(base));
    }
    const HmcResult res = sample(*td, hcfg);
    const auto [mean, cov] = weighted_moments(res.scenarios);

    auto r = start_report(cfg, "sample");
    r.outputs["acceptance_rate"] = res.acceptance_rate;
    r.outputs["burnin_acceptance"] = res.burnin_acceptance;
    r.outputs["step_size"] = res.step_size;
    r.outputs["divergences"] = res.divergences;
    r.outputs["sample"] = moments_json(mean, cov);
    json ess = json::array();
    for (Index c = 0; c < res.scenarios.dim(); ++c) ess.push_back(effective_sample_size(res.scenarios.scenarios().col(c)));
    r.outputs["effective_sample_size"] = ess;

    const auto path = cfg.out_dir / "samples.csv";
    io::write_scenarios_csv(path, res.scenarios);
    r.artifacts["scenarios"] = path.string();
    finish(r, cfg, t0);
    return r;
}

io::RunReport cmd_case_study(const CaseStudyOptions& opts) {
    const auto t0 = clock::now();
    const IterativeConfig icfg = case_study_config(opts.n_scenarios, opts.seed);
    const CaseStudyResult cs = run_case_study(icfg);
    const auto& upd = cs.analytic.updated;

    io::Config echo_cfg;
    echo_cfg.base_normal = cs.base;
    echo_cfg.moment_views = case_study_views();
    echo_cfg.iterative = icfg;
    echo_cfg.seed = opts.seed;
    echo_cfg.out_dir = opts.out_dir;
    echo_cfg.format = opts.format;
    echo_cfg.ellipse_pairs = {{1, 2}, {1, 3}, {3, 4}};

    auto r = start_report(echo_cfg, "case-study");
    json analytic = moments_json(upd.mean(), upd.cov());
    analytic["seconds"] = cs.analytic_seconds;
    analytic["theta_mu_info"] = to_json(cs.analytic.theta_mu_info);
    analytic["theta_sigma_info"] = to_json(cs.analytic.theta_sigma_info);
    r.outputs["analytic"] = analytic;

    const auto& it = cs.iterative;
    json table = json::array();
    Matrix rows(static_cast<Index>(it.trace.size()), 4);
    for (std::size_t s = 0; s < it.trace.size(); ++s) {
        const auto& rec = it.trace[s];
        table.push_back({{"step", rec.step}, {"ens", rec.ens}, {"mean_error", rec.mean_error}, {"cov_error", rec.cov_error}});
        rows.row(static_cast<Index>(s)) << rec.step, rec.ens, rec.mean_error, rec.cov_error;
    }
    const auto [mean, cov] = weighted_moments(it.scenarios);
    r.outputs["iterative"] = {{"converged", it.converged},
                              {"steps", it.trace.size()},
                              {"seconds", cs.iterative_seconds},
                              {"table", table},
                              {"trace", io::trace_to_json(it.trace)},
                              {"theta_info_hat", to_json(it.theta_info_hat)},
                              {"final", moments_json(mean, cov)},
                              {"residual_norm", view_residual(it.scenarios, cs.expanded_views).cwiseAbs().maxCoeff()}};
    r.outputs["kernels"] = kernels::isa_name(kernels::active_isa());

    const auto table_path = opts.out_dir / "table2.csv";
    io::write_matrix_csv(table_path, rows, {"step", "ens", "mean_error", "cov_error"});
    r.artifacts["table"] = table_path.string();

    Matrix erows(0, 5);
    std::vector<std::string> labels;
    const int pts = echo_cfg.ellipse_points;
    append_ellipses(erows, labels, "base", cs.base.mean(), cs.base.cov(), echo_cfg.ellipse_pairs, pts);
    for (const auto& rec : it.trace) {
        append_ellipses(erows, labels, "step" + std::to_string(rec.step), rec.weighted_mean, rec.weighted_cov,
                        echo_cfg.ellipse_pairs, pts);
    }
    append_ellipses(erows, labels, "analytic", upd.mean(), upd.cov(), echo_cfg.ellipse_pairs, pts);
    const auto ell_path = opts.out_dir / "ellipses.csv";
    write_ellipses(ell_path, erows, labels);
    r.artifacts["ellipses"] = ell_path.string();

    finish(r, echo_cfg, t0);
    return r;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const InfeasibleError*>(&e)) return 3;
    if (dynamic_cast<const ConvergenceError*>(&e)) return 4;
    if (dynamic_cast<const TuningError*>(&e)) return 4;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return 2;
    return 1;
}

int main(int argc, char** argv) {
    CLI::App app{"Minimum relative entropy updates: closed form for normal bases, entropy pooling, iterative HMC"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::string out;
        std::uint64_t seed = 0;
        std::string format;
    };
    Common common;
    int scenarios = 100000;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", common.config, "Config file (JSON)");
        if (config_required) opt->required();
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--seed", common.seed, "Random seed");
        sub->add_option("--format", common.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    };
    auto* analytic = app.add_subcommand("analytic", "Closed-form update of a normal base");
    auto* pool = app.add_subcommand("pool", "Entropy pooling of a scenario file");
    auto* iterative = app.add_subcommand("iterative", "Iterative HMC + entropy pooling");
    auto* samp = app.add_subcommand("sample", "HMC draws from the (tilted) base");
    auto* cs = app.add_subcommand("case-study", "Seven-variable example, closed form vs iterative");
    for (auto* sub : {analytic, pool, iterative, samp}) add_common(sub, true);
    add_common(cs, false);
    cs->add_option("--scenarios", scenarios, "Scenarios per outer step")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        io::RunReport report;
        if (cs->parsed()) {
            CaseStudyOptions opts;
            opts.n_scenarios = scenarios;
            if (cs->count("--seed")) opts.seed = common.seed;
            if (!common.out.empty()) opts.out_dir = common.out;
            if (!common.format.empty()) opts.format = common.format;
            report = cmd_case_study(opts);
        } else {
            io::Config cfg = io::read_config(common.config);
            CLI::App* sub = app.get_subcommands().front();
            if (!common.out.empty()) cfg.out_dir = common.out;
            if (sub->count("--seed")) {
                cfg.seed = common.seed;
                cfg.iterative.hmc.seed = common.seed;
            }
            if (!common.format.empty()) cfg.format = common.format;
            if (sub == analytic) report = cmd_analytic(cfg);
            else if (sub == pool) report = cmd_pool(cfg);
            else if (sub == iterative) report = cmd_iterative(cfg);
            else report = cmd_sample(cfg);
        }
        std::cout << io::report_to_json(report)["artifacts"]["report"].get<std::string>() << '\n';
        if (report.mode == "iterative" && !report.outputs["converged"].get<bool>()) {
            std::cerr << "mre: iterative run did not converge within max_outer steps\n";
            return 4;
        }
        if (report.mode == "case-study" && !report.outputs["iterative"]["converged"].get<bool>()) {
            std::cerr << "mre: iterative case study did not converge\n";
            return 4;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "mre: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace mre::cli
