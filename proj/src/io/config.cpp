#include "mre/io.hpp"

#include "mre/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace mre::io {

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& section) {
    if (!obj.is_object()) throw ValidationError("config: '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ValidationError("config: unknown key '" + section + "." + key + "'");
    }
}

bool is_scalar(const json& v) { return v.is_number() || (v.is_string() && v.get<std::string>().find(".csv") == std::string::npos); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

// Arrays inline, or a CSV path (a single row or column for vectors).
Matrix read_matrix(const json& v, const std::string& where, const std::filesystem::path& base) {
    if (v.is_string()) return read_matrix_csv(resolve(base, v.get<std::string>()));
    return matrix_from_json(v, where);
}

Vector read_vector(const json& v, const std::string& where, const std::filesystem::path& base) {
    if (v.is_string()) {
        const Matrix m = read_matrix_csv(resolve(base, v.get<std::string>()));
        if (m.rows() != 1 && m.cols() != 1) throw ValidationError("config: " + where + " must be a single row or column");
        return m.rows() == 1 ? Vector(m.row(0).transpose()) : Vector(m.col(0));
    }
    return vector_from_json(v, where);
}

Vector vector_or_scalar(const json& v, std::optional<Index> dim, const std::string& where,
                        const std::filesystem::path& base) {
    if (is_scalar(v)) {
        if (!dim) throw ValidationError("config: scalar " + where + " needs base.dim");
        return Vector::Constant(*dim, parse_number(v, where));
    }
    return read_vector(v, where, base);
}

long long parse_integer(const json& v, const std::string& where) {
    const double d = parse_number(v, where);
    if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ValidationError("config: " + where + " must be an integer");
    return static_cast<long long>(d);
}

int parse_int(const json& v, const std::string& where) {
    const long long i = parse_integer(v, where);
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
        throw ValidationError("config: " + where + " out of range");
    }
    return static_cast<int>(i);
}

std::uint64_t parse_seed(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec == std::errc() && ptr == s.data() + s.size()) return out;
    }
    throw ValidationError("config: " + where + " must be a non-negative 64-bit integer");
}

bool parse_bool(const json& v, const std::string& where) {
    if (!v.is_boolean()) throw ValidationError("config: " + where + " must be true or false");
    return v.get<bool>();
}

Matrix correlation_matrix(const json& v, Index n, const std::string& where, const std::filesystem::path& base) {
    if (is_scalar(v)) {
        const double rho = parse_number(v, where);
        Matrix c = Matrix::Constant(n, n, rho);
        c.diagonal().setOnes();
        return c;
    }
    return read_matrix(v, where, base);
}

Matrix covariance_from(const Vector& sd, const Matrix& corr, const std::string& where) {
    if (corr.rows() != sd.size() || corr.cols() != sd.size()) {
        throw ValidationError("config: " + where + " correlation is " + std::to_string(corr.rows()) + "x" +
                              std::to_string(corr.cols()) + ", expected " + std::to_string(sd.size()) + "x" +
                              std::to_string(sd.size()));
    }
    for (Index i = 0; i < sd.size(); ++i) {
        if (!(sd[i] > 0.0)) throw ValidationError("config: " + where + " standard deviations must be positive");
    }
    return sd.asDiagonal() * corr * sd.asDiagonal();
}

void parse_base(const json& b, Config& cfg) {
    check_keys(b, {"dim", "mean", "cov", "std", "corr", "scenarios"}, "base");
    std::optional<Index> dim;
    if (b.contains("dim")) {
        const int d = parse_int(b["dim"], "base.dim");
        if (d < 1) throw ValidationError("config: base.dim must be positive");
        dim = d;
    }
    if (b.contains("scenarios")) {
        if (!b["scenarios"].is_string()) throw ValidationError("config: base.scenarios must be a path");
        cfg.scenarios_path = resolve(cfg.source_dir, b["scenarios"].get<std::string>());
    }
    if (!b.contains("mean")) {
        if (b.contains("cov") || b.contains("std") || b.contains("corr")) {
            throw ValidationError("config: base covariance given without base.mean");
        }
        return;
    }
    const Vector mean = vector_or_scalar(b["mean"], dim, "base.mean", cfg.source_dir);
    const Index n = mean.size();
    Matrix cov;
    if (b.contains("cov")) {
        if (b.contains("std") || b.contains("corr")) throw ValidationError("config: give base.cov or base.std/corr, not both");
        cov = read_matrix(b["cov"], "base.cov", cfg.source_dir);
    } else if (b.contains("std")) {
        const Vector sd = vector_or_scalar(b["std"], n, "base.std", cfg.source_dir);
        const Matrix corr = b.contains("corr") ? correlation_matrix(b["corr"], n, "base.corr", cfg.source_dir)
                                               : Matrix(Matrix::Identity(n, n));
        cov = covariance_from(sd, corr, "base");
    } else {
        throw ValidationError("config: base needs cov or std");
    }
    cfg.base_normal.emplace(mean, cov);
}

void parse_views(const json& v, Config& cfg) {
    check_keys(v,
               {"gamma_mu", "mu_info", "gamma_sigma", "sigma2_info", "sigma_info_std", "sigma_info_corr",
                "pinned_mean", "features", "theta"},
               "views");
    const bool moment = v.contains("gamma_mu") || v.contains("gamma_sigma");
    if (moment && v.contains("features")) throw ValidationError("config: views take moment blocks or features, not both");

    std::optional<Index> dim;
    if (cfg.base_normal) dim = cfg.base_normal->dim();

    if (moment) {
        Matrix gm, gs;
        Vector mi(0);
        Matrix s2;
        if (v.contains("gamma_mu")) {
            gm = read_matrix(v["gamma_mu"], "views.gamma_mu", cfg.source_dir);
            if (!v.contains("mu_info")) throw ValidationError("config: views.gamma_mu given without views.mu_info");
            mi = read_vector(v["mu_info"], "views.mu_info", cfg.source_dir);
            dim = gm.cols();
        }
        if (v.contains("gamma_sigma")) {
            gs = read_matrix(v["gamma_sigma"], "views.gamma_sigma", cfg.source_dir);
            if (!dim) dim = gs.cols();
            const Index k = gs.rows();
            if (v.contains("sigma2_info")) {
                if (v.contains("sigma_info_std")) throw ValidationError("config: give views.sigma2_info or views.sigma_info_std, not both");
                s2 = read_matrix(v["sigma2_info"], "views.sigma2_info", cfg.source_dir);
            } else if (v.contains("sigma_info_std")) {
                const Vector sd = vector_or_scalar(v["sigma_info_std"], k, "views.sigma_info_std", cfg.source_dir);
                const Matrix corr = v.contains("sigma_info_corr")
                                        ? correlation_matrix(v["sigma_info_corr"], k, "views.sigma_info_corr", cfg.source_dir)
                                        : Matrix(Matrix::Identity(k, k));
                s2 = covariance_from(sd, corr, "views.sigma_info");
            } else {
                throw ValidationError("config: views.gamma_sigma given without views.sigma2_info");
            }
        }
        const Index n = *dim;
        if (gm.size() == 0) gm = Matrix(0, n);
        if (gs.size() == 0) {
            gs = Matrix(0, n);
            s2 = Matrix(0, 0);
        }
        cfg.moment_views.emplace(gm, mi, gs, s2);
    }

    if (v.contains("features")) {
        const auto& list = v["features"];
        if (!list.is_array() || list.empty()) throw ValidationError("config: views.features must be a non-empty list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "views.features[" + std::to_string(i) + "]";
            check_keys(list[i], {"constant", "linear", "quadratic", "target"}, where);
            FeatureSpec f;
            if (list[i].contains("constant")) f.constant = parse_number(list[i]["constant"], where + ".constant");
            if (list[i].contains("linear")) f.linear = read_vector(list[i]["linear"], where + ".linear", cfg.source_dir);
            if (list[i].contains("quadratic")) f.quadratic = read_matrix(list[i]["quadratic"], where + ".quadratic", cfg.source_dir);
            if (!list[i].contains("target")) throw ValidationError("config: " + where + " has no target");
            f.target = parse_number(list[i]["target"], where + ".target");
            cfg.features.push_back(std::move(f));
        }
    }

    if (v.contains("pinned_mean")) cfg.pinned_mean = read_vector(v["pinned_mean"], "views.pinned_mean", cfg.source_dir);
    if (v.contains("theta")) cfg.theta = read_vector(v["theta"], "views.theta", cfg.source_dir);
}

void parse_hmc(const json& h, HmcConfig& hmc) {
    check_keys(h, {"step_size", "n_leapfrog", "n_samples", "n_burnin", "thin", "target_accept", "adapt", "step_jitter"},
               "numerics.hmc");
    if (h.contains("step_size")) hmc.step_size = parse_number(h["step_size"], "numerics.hmc.step_size");
    if (h.contains("n_leapfrog")) hmc.n_leapfrog = parse_int(h["n_leapfrog"], "numerics.hmc.n_leapfrog");
    if (h.contains("n_samples")) hmc.n_samples = parse_int(h["n_samples"], "numerics.hmc.n_samples");
    if (h.contains("n_burnin")) hmc.n_burnin = parse_int(h["n_burnin"], "numerics.hmc.n_burnin");
    if (h.contains("thin")) hmc.thin = parse_int(h["thin"], "numerics.hmc.thin");
    if (h.contains("target_accept")) hmc.target_accept = parse_number(h["target_accept"], "numerics.hmc.target_accept");
    if (h.contains("adapt")) hmc.adapt = parse_bool(h["adapt"], "numerics.hmc.adapt");
    if (h.contains("step_jitter")) hmc.step_jitter = parse_number(h["step_jitter"], "numerics.hmc.step_jitter");
}

void parse_numerics(const json& n, Config& cfg) {
    check_keys(n, {"tol", "max_iter", "theta_cap", "n_scenarios", "delta", "max_outer", "seed", "hmc"}, "numerics");
    if (n.contains("tol")) cfg.pool.tol = parse_number(n["tol"], "numerics.tol");
    if (n.contains("max_iter")) cfg.pool.max_iter = parse_int(n["max_iter"], "numerics.max_iter");
    if (n.contains("theta_cap")) cfg.pool.theta_cap = parse_number(n["theta_cap"], "numerics.theta_cap");
    if (n.contains("n_scenarios")) cfg.iterative.n_scenarios = parse_int(n["n_scenarios"], "numerics.n_scenarios");
    if (n.contains("delta")) cfg.iterative.delta = parse_number(n["delta"], "numerics.delta");
    if (n.contains("max_outer")) cfg.iterative.max_outer = parse_int(n["max_outer"], "numerics.max_outer");
    if (n.contains("seed")) cfg.seed = parse_seed(n["seed"], "numerics.seed");
    if (n.contains("hmc")) parse_hmc(n["hmc"], cfg.iterative.hmc);
}

void parse_output(const json& o, Config& cfg) {
    check_keys(o, {"dir", "format", "ellipse_pairs", "ellipse_points"}, "output");
    if (o.contains("dir")) {
        if (!o["dir"].is_string()) throw ValidationError("config: output.dir must be a path");
        cfg.out_dir = resolve(cfg.source_dir, o["dir"].get<std::string>());
    }
    if (o.contains("format")) {
        if (!o["format"].is_string()) throw ValidationError("config: output.format must be json or csv");
        cfg.format = o["format"].get<std::string>();
    }
    if (o.contains("ellipse_pairs")) {
        const auto& pairs = o["ellipse_pairs"];
        if (!pairs.is_array()) throw ValidationError("config: output.ellipse_pairs must be a list of [i, j]");
        for (const auto& p : pairs) {
            if (!p.is_array() || p.size() != 2) throw ValidationError("config: output.ellipse_pairs must be a list of [i, j]");
            cfg.ellipse_pairs.emplace_back(parse_int(p[0], "output.ellipse_pairs"), parse_int(p[1], "output.ellipse_pairs"));
        }
    }
    if (o.contains("ellipse_points")) cfg.ellipse_points = parse_int(o["ellipse_points"], "output.ellipse_points");
}

}  // namespace

double parse_number(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        while (!s.empty() && s.back() == ' ') s.pop_back();
        while (!s.empty() && s.front() == ' ') s.erase(0, 1);
        double scale = 1.0;
        if (!s.empty() && s.back() == '%') {
            s.pop_back();
            scale = 0.01;
        }
        double d = 0.0;
        const char* first = s.data();
        if (!s.empty() && *first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), d);
        if (!s.empty() && ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(d)) return d * scale;
    }
    throw ValidationError("config: " + where + " is not a number: " + v.dump());
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Vector vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError("config: " + where + " must be a list of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = parse_number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError("config: " + where + " must be a list of rows");
    if (j.empty()) return Matrix(0, 0);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw ValidationError("config: " + where + " row " + std::to_string(r) + " must have " +
                                  std::to_string(cols) + " entries");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Index>(r), static_cast<Index>(c)) =
                parse_number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

std::optional<ExpectationViews> Config::feature_views(Index dim) const {
    if (features.empty()) return std::nullopt;
    std::vector<QuadraticFeature> qf;
    Vector targets(static_cast<Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) {
        qf.push_back({features[i].constant, features[i].linear, features[i].quadratic});
        targets[static_cast<Index>(i)] = features[i].target;
    }
    return ExpectationViews(std::make_shared<PolynomialFeatureMap>(dim, std::move(qf)), std::move(targets));
}

json Config::echo() const {
    json doc;
    json base = json::object();
    if (base_normal) {
        base["mean"] = to_json(base_normal->mean());
        base["cov"] = to_json(base_normal->cov());
    }
    if (scenarios_path) base["scenarios"] = scenarios_path->string();
    doc["base"] = base;

    json views = json::object();
    if (moment_views) {
        if (moment_views->k_mu() > 0) {
            views["gamma_mu"] = to_json(moment_views->gamma_mu());
            views["mu_info"] = to_json(moment_views->mu_info());
        }
        if (moment_views->k_sigma() > 0) {
            views["gamma_sigma"] = to_json(moment_views->gamma_sigma());
            views["sigma2_info"] = to_json(moment_views->sigma2_info());
        }
    }
    if (!features.empty()) {
        json list = json::array();
        for (const auto& f : features) {
            json e{{"constant", f.constant}, {"target", f.target}};
            if (f.linear.size() > 0) e["linear"] = to_json(f.linear);
            if (f.quadratic.size() > 0) e["quadratic"] = to_json(f.quadratic);
            list.push_back(std::move(e));
        }
        views["features"] = std::move(list);
    }
    if (pinned_mean) views["pinned_mean"] = to_json(*pinned_mean);
    if (theta) views["theta"] = to_json(*theta);
    doc["views"] = views;

    const auto& h = iterative.hmc;
    doc["numerics"] = {
        {"tol", pool.tol},
        {"max_iter", pool.max_iter},
        {"theta_cap", pool.theta_cap},
        {"n_scenarios", iterative.n_scenarios},
        {"delta", iterative.delta},
        {"max_outer", iterative.max_outer},
        {"seed", seed},
        {"hmc",
         {{"step_size", h.step_size},
          {"n_leapfrog", h.n_leapfrog},
          {"n_samples", h.n_samples},
          {"n_burnin", h.n_burnin},
          {"thin", h.thin},
          {"target_accept", h.target_accept},
          {"adapt", h.adapt},
          {"step_jitter", h.step_jitter}}},
    };

    json pairs = json::array();
    for (const auto& [i, j] : ellipse_pairs) pairs.push_back({i, j});
    doc["output"] = {{"dir", out_dir.string()}, {"format", format}, {"ellipse_pairs", pairs},
                     {"ellipse_points", ellipse_points}};
    return doc;
}

Config parse_config(const json& doc, const std::filesystem::path& source_dir) {
    check_keys(doc, {"base", "views", "numerics", "output"}, "<top level>");
    Config cfg;
    cfg.source_dir = source_dir;
    if (doc.contains("base")) parse_base(doc["base"], cfg);
    if (doc.contains("views")) parse_views(doc["views"], cfg);
    if (doc.contains("numerics")) parse_numerics(doc["numerics"], cfg);
    if (doc.contains("output")) parse_output(doc["output"], cfg);
    if (cfg.format != "json" && cfg.format != "csv") throw ValidationError("config: output.format must be json or csv");
    if (cfg.ellipse_points < 3) throw ValidationError("config: output.ellipse_points must be at least 3");
    cfg.iterative.hmc.seed = cfg.seed;
    cfg.iterative.validate();
    return cfg;
}

Config read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace mre::io
