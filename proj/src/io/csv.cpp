#include "mre/io.hpp"

#include "mre/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mre::io {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool blank(const std::string& line) { return trim(line).empty(); }

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    return out;
}

}  // namespace

WeightedScenarios parse_scenarios_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (blank(line)) continue;
        header = split(line);
        break;
    }
    if (header.empty()) throw ValidationError(source + ": missing header row");

    const bool has_prob = header.back() == "prob";
    const std::size_t ncols = header.size();
    const std::size_t n = has_prob ? ncols - 1 : ncols;
    if (n == 0) throw ValidationError(source + ":" + std::to_string(lineno) + ": header has no variable columns");
    for (std::size_t c = 0; c < n; ++c) {
        if (header[c].empty()) {
            throw ValidationError(source + ":" + std::to_string(lineno) + ": empty name for column " + std::to_string(c + 1));
        }
        if (header[c] == "prob") {
            throw ValidationError(source + ":" + std::to_string(lineno) + ": prob must be the last column");
        }
    }

    std::vector<double> values;
    std::vector<double> probs;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const auto fields = split(line);
        if (fields.size() != ncols) {
            throw ValidationError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncols) +
                                  " columns, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            const auto v = to_double(fields[c]);
            if (!v || !std::isfinite(*v)) {
                throw ValidationError(source + ":" + std::to_string(lineno) + ": column " + std::to_string(c + 1) +
                                      " is not a finite number: '" + fields[c] + "'");
            }
            if (has_prob && c + 1 == ncols) {
                if (!(*v > 0.0)) {
                    throw ValidationError(source + ":" + std::to_string(lineno) + ": probability must be positive");
                }
                probs.push_back(*v);
            } else {
                values.push_back(*v);
            }
        }
    }

    const Index J = static_cast<Index>(values.size() / n);
    if (J < 2) throw ValidationError(source + ": need at least 2 scenarios, found " + std::to_string(J));
    Matrix scenarios(J, static_cast<Index>(n));
    for (Index j = 0; j < J; ++j) {
        for (Index c = 0; c < static_cast<Index>(n); ++c) scenarios(j, c) = values[j * n + c];
    }
    if (!has_prob) return WeightedScenarios::uniform(std::move(scenarios));
    try {
        return WeightedScenarios(std::move(scenarios), Eigen::Map<const Vector>(probs.data(), J));
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

WeightedScenarios read_scenarios_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_scenarios_csv(in, path.string());
}

void write_scenarios_csv(std::ostream& out, const WeightedScenarios& ws) {
    for (Index c = 0; c < ws.dim(); ++c) out << 'x' << (c + 1) << ',';
    out << "prob\n";
    for (Index j = 0; j < ws.size(); ++j) {
        for (Index c = 0; c < ws.dim(); ++c) out << format_double(ws.scenarios()(j, c)) << ',';
        out << format_double(ws.probs()[j]) << '\n';
    }
}

void write_scenarios_csv(const std::filesystem::path& path, const WeightedScenarios& ws) {
    auto out = open_out(path);
    write_scenarios_csv(out, ws);
    if (!out) throw ValidationError("failed writing " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        const auto fields = split(line);
        std::vector<double> row;
        bool numeric = true;
        for (const auto& f : fields) {
            const auto v = to_double(f);
            if (!v) {
                numeric = false;
                break;
            }
            row.push_back(*v);
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": non-numeric entry");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(rows.front().size()) + " columns, found " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    if (!header.empty()) out << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
        out << '\n';
    }
    if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace mre::io
