#pragma once

#include "mre/io.hpp"

#include <exception>

namespace mre::cli {

// Each command writes its artifacts and report under cfg.out_dir.
io::RunReport cmd_analytic(const io::Config& cfg);
io::RunReport cmd_pool(const io::Config& cfg);
io::RunReport cmd_iterative(const io::Config& cfg);
io::RunReport cmd_sample(const io::Config& cfg);

struct CaseStudyOptions {
    int n_scenarios = 100000;
    std::uint64_t seed = 20240601;
    std::filesystem::path out_dir = ".";
    std::string format = "json";
};
io::RunReport cmd_case_study(const CaseStudyOptions& opts);

/// 0 ok, 2 validation, 3 infeasible, 4 non-convergence, 1 anything else.
int exit_code_for(const std::exception& e);

int main(int argc, char** argv);

}  // namespace mre::cli
