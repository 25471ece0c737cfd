#pragma once

#include "thinlimit/optimize.hpp"
#include "thinlimit/rodsolver.hpp"
#include "thinlimit/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace thinlimit {

/// Initial reduced state for `reduce` and `gamma`.
struct InitSpec {
    std::string kind = "identity";  // identity | flat | rolled | embedded
    double sigma = 1e-2;             // Gaussian noise on every entry
    double radius = 1.0;             // rolled
};

struct RodConfig {
    int steps = 1000;
    bool reorthonormalize = true;
    std::vector<double> initial_frame;  // row-major 3x3; empty = identity
    std::vector<double> initial_point;  // empty = origin
};

/// Everything a CLI run needs. Loaded from a JSON document; see README for
/// the schema. Unknown keys anywhere raise ConfigError.
struct RunConfig {
    ScenarioParams scenario;
    int resolution = 16;
    int normal_resolution = 5;
    double h = 0.1;
    std::vector<double> h_list{0.2, 0.1, 0.05};
    std::uint64_t seed = 42;
    InitSpec init;
    OptimizeOptions optimize;
    RodConfig rod;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks ranges that the parser alone cannot (resolution, h_list order, ...).
void validate_config(const RunConfig& config);

}  // namespace thinlimit
