#pragma once

#include "thinlimit/geometry.hpp"
#include "thinlimit/report.hpp"

#include <memory>

namespace thinlimit {

/// Nodal map values f_h on a tubular grid, one column per bulk node.
struct BulkState {
    std::shared_ptr<const TubularGrid> grid;
    Eigen::MatrixXd values;  // n x grid->size()

    int dim() const { return static_cast<int>(values.rows()); }
};

BulkState make_bulk_state(std::shared_ptr<const TubularGrid> grid, int n);

/// Finite-difference derivative df at bulk node b in coordinate directions
/// (chart axes, then normal axes).
MatN bulk_derivative(const BulkState& state, int b);

/// (1/h^2) * weighted mean over the tube of dist^2(df, SO(n)) in the bulk frame.
EnergyReport eval_Eh(const BulkState& state);

struct BulkGradient {
    Eigen::MatrixXd values;       // same shape as BulkState::values
    std::vector<int> fallback_nodes;
};

/// Gradient of the quadrature sum. Analytic (2 (A - R) L^T per node) wherever
/// the nearest rotation is unique, local central differences otherwise.
BulkGradient grad_Eh(const BulkState& state);

/// Energy and gradient in one pass.
double eval_grad_Eh(const BulkState& state, Eigen::MatrixXd& gradient, std::vector<int>* fallback = nullptr);

/// dist^2(A L, SO(n)) for a coordinate-frame derivative A and orthonormalizer
/// L = J^{-1}, with its derivative in A. eval_Eh is the weighted sum of these.
double bulk_density_jet(const MatN& a, const MatN& l, MatN* grad = nullptr);

/// Subtract the weighted mean so that the integral of f over the tube vanishes.
void apply_mean_zero_gauge(BulkState& state);

/// Weighted mean of f over the tube.
Eigen::VectorXd weighted_mean(const BulkState& state);

}  // namespace thinlimit
