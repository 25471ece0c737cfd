#pragma once

#include "thinlimit/energy3d.hpp"
#include "thinlimit/reduced.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <string>

namespace thinlimit {

struct OptimizeOptions {
    int max_iter = 5000;      // per continuation stage for the reduced problem
    double grad_tol = 1e-8;   // on the Euclidean norm of the gradient
    double beta0 = 1e3;
    double beta_growth = 10.0;
    double beta_max = 1e6;
    int memory = 10;
    double armijo = 1e-4;
    int max_backtracks = 50;
    /// Iterations between rebuilds of the sparse Hessian preconditioner
    /// (0 disables preconditioning).
    int precond_refresh = 20;
    double violation_tol = 1e-6;  // strict tolerance used for the final report
    /// Called once per accepted iterate (streaming trace).
    std::function<void(const TraceRecord&)> on_iteration;
};

/// Thrown when the objective becomes non-finite or the line search cannot
/// find an acceptable step along steepest descent while far from a plateau.
struct OptimizerFailure : OptimizerError {
    OptimizerFailure(const std::string& what, std::vector<TraceRecord> t)
        : OptimizerError(what), trace(std::move(t)) {}
    std::vector<TraceRecord> trace;
};

struct LbfgsProblem {
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_grad;
    /// Optional gauge normalization applied to every accepted iterate. Must be
    /// an exact symmetry (value and gradient unchanged), e.g. a translation.
    std::function<void(Eigen::VectorXd&)> gauge;
    /// Optional per-iterate constraint measure recorded in the trace.
    std::function<double(const Eigen::VectorXd&)> violation;
    /// Optional factory for the initial inverse-Hessian approximation at x:
    /// returns an in-place solve v <- M^{-1} v with M symmetric positive definite.
    std::function<std::function<void(Eigen::VectorXd&)>(const Eigen::VectorXd&)> preconditioner;
};

struct LbfgsResult {
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    std::string status;  // converged | max_iter | stalled
    std::vector<TraceRecord> trace;
};

/// Limited-memory BFGS with Armijo backtracking. `x` is updated in place.
/// Accepted iterates never increase the objective.
LbfgsResult lbfgs_minimize(const LbfgsProblem& problem, Eigen::VectorXd& x, const OptimizeOptions& options,
                           int iter_offset = 0);

struct ReducedResult {
    ReducedState state;
    EnergyReport report;  // strict-mode evaluation at violation_tol plus the full trace
    std::string status;
    int iterations = 0;
};

/// Penalty continuation beta0, beta0 * growth, ..., beta_max. Between stages q
/// is projected nodewise onto SO(n) and F is re-integrated from the projected
/// tangential frame by weighted least squares. F is kept mean-zero, and the
/// frame at the center node is pinned to the frame of `init` there.
ReducedResult minimize_reduced(const ScenarioSpec& s, const ReducedState& init, const OptimizeOptions& options = {});

struct BulkResult {
    BulkState state;
    EnergyReport report;
    std::string status;
    int iterations = 0;
};

/// L-BFGS on E_h with the mean-zero gauge re-applied to every iterate.
BulkResult minimize_bulk(const BulkState& init, const OptimizeOptions& options = {});

/// Replaces q at each node by its nearest rotation (frame blockdiag(g, I))
/// and re-integrates F from the projected tangential columns.
void project_reduced(ReducedState& state, const SurfaceFields& fields);

/// Weighted least-squares F with dF ~ `tangent` (n x (m N), node-major
/// columns), anchored to `previous` by a tiny Tikhonov term.
Eigen::MatrixXd integrate_tangent_field(const SurfaceMesh& mesh, const Eigen::MatrixXd& tangent,
                                        const Eigen::MatrixXd& previous);

/// Dense Hessian of a node-local term, attached to its global variables.
struct LocalHessian {
    std::vector<int> vars;
    Eigen::MatrixXd hess;
};

/// Sum of local Hessians as a sparse matrix.
Eigen::SparseMatrix<double> assemble_hessian(const std::vector<LocalHessian>& terms, int dim);

/// Positive semidefinite model of the Hessian of eval_grad_Elim(., beta) in
/// the packed variable order [vec(F); vec(q_perp)]: per-node Hessians of
/// limit_density_jet by central differences, negative eigenvalues clipped,
/// chained through the stencils.
Eigen::SparseMatrix<double> reduced_hessian_model(const ReducedState& state, const SurfaceFields& fields, double beta);

/// Same construction for eval_Eh in the order vec(values).
Eigen::SparseMatrix<double> bulk_hessian_model(const BulkState& state);

/// Rigid normalization of a reduced state: rotate so the frame at `node`
/// equals `reference` (a rotation in the orthonormal frame), then make F
/// mean-zero.
void pin_reduced_gauge(ReducedState& state, const SurfaceFields& fields, int node, const MatN& reference);

}  // namespace thinlimit
