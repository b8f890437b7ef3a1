#pragma once

#include "mre/core_model.hpp"
#include "mre/iterative.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mre::io {

using json = nlohmann::json;

// Scenario files: header `x1,...,xn[,prob]`, one scenario per line. Without a
// prob column every scenario gets 1/J. Errors name the offending line.
WeightedScenarios parse_scenarios_csv(std::istream& in, const std::string& source = "<input>");
WeightedScenarios read_scenarios_csv(const std::filesystem::path& path);
void write_scenarios_csv(std::ostream& out, const WeightedScenarios& ws);
void write_scenarios_csv(const std::filesystem::path& path, const WeightedScenarios& ws);

/// Plain numeric CSV; a first line that does not parse as numbers is taken as a header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header = {});

/// Numbers or strings; "12.5%" becomes 0.125.
double parse_number(const json& v, const std::string& where);

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from_json(const json& j, const std::string& where);
Matrix matrix_from_json(const json& j, const std::string& where);

/// Polynomial (degree <= 2) view as written in a config file.
struct FeatureSpec {
    double constant = 0.0;
    Vector linear;
    Matrix quadratic;
    double target = 0.0;
};

struct Config {
    std::filesystem::path source_dir;

    std::optional<NormalParams> base_normal;
    std::optional<std::filesystem::path> scenarios_path;

    std::optional<MomentViews> moment_views;
    std::optional<Vector> pinned_mean;
    std::vector<FeatureSpec> features;
    std::optional<Vector> theta;

    PoolingConfig pool;
    IterativeConfig iterative;
    std::uint64_t seed = 0;

    std::filesystem::path out_dir = ".";
    std::string format = "json";
    std::vector<std::pair<int, int>> ellipse_pairs;  // 1-based variable indices
    int ellipse_points = 100;

    /// Expectation views from `features`, or nullopt when there are none.
    std::optional<ExpectationViews> feature_views(Index dim) const;

    /// The effective configuration as a config document (defaults filled in).
    json echo() const;
};

/// Sections: base, views, numerics, output. Unknown keys throw ValidationError.
Config parse_config(const json& doc, const std::filesystem::path& source_dir = ".");
Config read_config(const std::filesystem::path& path);

struct RunReport {
    std::string schema_version = "mre-report/1";
    std::string mode;
    std::uint64_t seed = 0;
    json config = json::object();
    json outputs = json::object();
    double elapsed_seconds = 0.0;
    std::map<std::string, std::string> artifacts;

    bool operator==(const RunReport&) const = default;
};

json report_to_json(const RunReport& r);
RunReport report_from_json(const json& j);

/// format "json" writes the document; "csv" writes flattened `key,value` rows.
void write_report(const std::filesystem::path& path, const RunReport& r, const std::string& format = "json");
RunReport read_report(const std::filesystem::path& path);

json trace_to_json(const IterationTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const IterationTrace& trace);

}  // namespace mre::io
