#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kronsolve/problems.hpp"

#include "json.hpp"

namespace kronsolve {

struct ProblemConfig {
    std::string type;  // circuit | convdiff | synthetic | files
    Index n0 = 30;
    Index n = 10;
    Index m = 10;
    double epsilon = 0.1;
    int r = 3;
    Index band = 1;
    bool spd = true;
    std::uint64_t seed = 12345;
    std::string manifest;  // files
    std::string rhs;
    std::string A1, A2, b;  // optional external circuit blocks
};

struct SolverConfig {
    std::string method = "gmres";  // gmres | bicgstab
    double tol = 1e-8;
    int restart = 50;
    int max_iter = 500;
    bool track_bandwidth = false;
};

struct SparsityConfig {
    std::string variant = "gram";  // gram | plain
    int power = 2;
    double density_cap = 0.20;
};

struct PrecondConfig {
    std::string type = "none";  // none | nkp | kinv | baseline
    int q = 1;
    std::string route = "svd";  // nkp: svd | als
    double als_tol = -1.0;
    int als_max_iter = -1;  // < 0: module default
    std::optional<SparsityConfig> sparsity;
    bool symmetrize = false;
};

struct OutputConfig {
    std::string dir = ".";
    std::string prefix = "run";
};

struct RunConfig {
    ProblemConfig problem;
    SolverConfig solver;
    PrecondConfig precond;
    OutputConfig output;
    int threads = 0;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);
void validate(const RunConfig& config);

/// Builds the problem named by the config (generators or manifest files).
ProblemInstance load_problem(const RunConfig& config);

/// Builds the configured preconditioner; `diagnostics` collects setup facts
/// (singular values, ALS residuals, pattern density).
Preconditioner build_preconditioner(const RunConfig& config,
                                    const ProblemInstance& problem,
                                    nlohmann::json* diagnostics = nullptr);

/// Writes the operator manifest plus MatrixMarket factor and rhs files;
/// returns the manifest path.
std::string write_instance(const std::string& dir, const std::string& prefix,
                           const ProblemInstance& problem);

/// Reads an operator manifest {"n", "m", "r", "A": [...], "B": [...]}.
KroneckerOperator load_manifest(const std::string& path);

}  // namespace kronsolve
