#include "mre/io.hpp"

#include "mre/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mre::io {

namespace {

constexpr const char* kSchema = "mre-report/1";

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Splits one CSV record of exactly two fields; fields may be quoted.
std::pair<std::string, std::string> split_pair(const std::string& line, std::size_t lineno, const std::string& source) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    if (quoted || fields.size() != 2) {
        throw ValidationError(source + ":" + std::to_string(lineno) + ": expected a key,value record");
    }
    return {fields[0], fields[1]};
}

std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// Like json::flatten, but keeps empty arrays and objects as leaves so the
// document survives a round trip.
void flatten_into(const json& v, const std::string& prefix, json& out) {
    if ((v.is_object() || v.is_array()) && !v.empty()) {
        if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) flatten_into(v[i], prefix + "/" + std::to_string(i), out);
        } else {
            for (const auto& [key, child] : v.items()) {
                flatten_into(child, prefix + "/" + escape_token(key), out);
            }
        }
        return;
    }
    out[prefix] = v;
}

}  // namespace

json report_to_json(const RunReport& r) {
    return json{{"schema_version", r.schema_version},
                {"mode", r.mode},
                {"seed", r.seed},
                {"config", r.config},
                {"outputs", r.outputs},
                {"timing", {{"elapsed_seconds", r.elapsed_seconds}}},
                {"artifacts", r.artifacts}};
}

RunReport report_from_json(const json& j) {
    if (!j.is_object() || !j.contains("schema_version")) throw ValidationError("report: missing schema_version");
    if (j["schema_version"] != kSchema) {
        throw ValidationError("report: unsupported schema " + j["schema_version"].dump() + " (expected " + kSchema + ")");
    }
    try {
        RunReport r;
        r.schema_version = j.at("schema_version").get<std::string>();
        r.mode = j.at("mode").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config = j.at("config");
        r.outputs = j.at("outputs");
        r.elapsed_seconds = j.at("timing").at("elapsed_seconds").get<double>();
        r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("report: ") + e.what());
    }
}

void write_report(const std::filesystem::path& path, const RunReport& r, const std::string& format) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    const json doc = report_to_json(r);
    if (format == "json") {
        out << doc.dump(2) << '\n';
    } else if (format == "csv") {
        out << "key,value\n";
        json flat = json::object();
        flatten_into(doc, "", flat);
        for (const auto& [key, value] : flat.items()) out << csv_quote(key) << ',' << csv_quote(value.dump()) << '\n';
    } else {
        throw ValidationError("report format must be json or csv, got '" + format + "'");
    }
    if (!out) throw ValidationError("failed writing " + path.string());
}

RunReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    try {
        if (first != std::string::npos && text[first] == '{') return report_from_json(json::parse(text));
        std::istringstream lines(text);
        std::string line;
        std::size_t lineno = 0;
        json flat = json::object();
        while (std::getline(lines, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto [key, value] = split_pair(line, lineno, path.string());
            if (lineno == 1 && key == "key" && value == "value") continue;
            flat[key] = json::parse(value);
        }
        // json::unflatten refuses the empty containers kept by flatten_into.
        json doc;
        for (const auto& [key, value] : flat.items()) doc[json::json_pointer(key)] = value;
        return report_from_json(doc);
    } catch (const json::exception& e) {
        throw ValidationError("report " + path.string() + ": " + e.what());
    }
}

json trace_to_json(const IterationTrace& trace) {
    json rows = json::array();
    for (const auto& r : trace) {
        rows.push_back({{"step", r.step},
                        {"ens", r.ens},
                        {"mean_error", r.mean_error},
                        {"cov_error", r.cov_error},
                        {"delta_theta_norm", r.delta_theta_norm},
                        {"damping", r.damping},
                        {"acceptance_rate", r.acceptance_rate},
                        {"step_size", r.step_size},
                        {"theta", to_json(r.theta)},
                        {"weighted_mean", to_json(r.weighted_mean)},
                        {"weighted_cov", to_json(r.weighted_cov)}});
    }
    return rows;
}

void write_trace_csv(const std::filesystem::path& path, const IterationTrace& trace) {
    Matrix m(static_cast<Index>(trace.size()), 8);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& r = trace[i];
        m.row(static_cast<Index>(i)) << r.step, r.ens, r.mean_error, r.cov_error, r.delta_theta_norm, r.damping,
            r.acceptance_rate, r.step_size;
    }
    write_matrix_csv(path, m, {"step", "ens", "mean_error", "cov_error", "delta_theta_norm", "damping", "acceptance_rate",
                                  "step_size"});
}

}  // namespace mre::io
