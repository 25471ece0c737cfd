#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace thinlimit {

// Square matrices up to 4x4 live on the stack; dimensions stay runtime values
// so the same code serves n = 3 and the generic paths.
constexpr int kMaxDim = 4;
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Chart point outside the scenario domain.
struct DomainError : Error {
    using Error::Error;
};

// Non-SPD metric, degenerate tube, inconsistent embedding.
struct GeometryError : Error {
    using Error::Error;
};

// Bad resolution, mesh mismatch, malformed scenario file.
struct ConfigError : Error {
    using Error::Error;
};

// NaN/Inf in a state handed to an energy.
struct EvaluationError : Error {
    using Error::Error;
};

struct OptimizerError : Error {
    using Error::Error;
};

}  // namespace thinlimit
