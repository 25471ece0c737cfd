#pragma once

#include "thinlimit/geometry.hpp"
#include "thinlimit/report.hpp"

#include <memory>

namespace thinlimit {

/// Limit configuration (F, q_perp) on a surface mesh. Column blocks of
/// `qperp` hold the k images q_perp(e_u) of the normal frame for each node.
struct ReducedState {
    std::shared_ptr<const SurfaceMesh> mesh;
    Eigen::MatrixXd F;      // n x N
    Eigen::MatrixXd qperp;  // n x (k N), node i -> columns [k i, k i + k)

    int dim() const { return static_cast<int>(F.rows()); }
    int codim() const { return mesh ? static_cast<int>(qperp.cols()) / mesh->size() : 0; }
    auto normal_block(int node) { return qperp.middleCols(codim() * node, codim()); }
    auto normal_block(int node) const { return qperp.middleCols(codim() * node, codim()); }
};

ReducedState make_reduced_state(std::shared_ptr<const SurfaceMesh> mesh, int n, int k);

/// Scenario data sampled at every mesh node, reused across evaluations.
struct SurfaceFields {
    std::vector<MatN> metric, metric_inv, orthonormalizer;  // L_g with L^T g L = I
    std::vector<std::vector<MatN>> shape;   // S_u = g^{-1} II_u
    std::vector<std::vector<MatN>> ii;      // lowered II_u
    std::vector<std::vector<MatN>> omega;   // normal connection per chart axis
    std::vector<double> weights;            // normalized quadrature weights (sum 1)
    int n = 3, m = 2, k = 1;
};

SurfaceFields sample_surface_fields(const ScenarioSpec& s, const SurfaceMesh& mesh);

/// Second moment of the uniform unit k-ball: 1 / (k + 2).
double kappa(int k);

struct QField {
    std::vector<MatN> q;        // [dF | q_perp] in chart coordinates
    std::vector<MatN> q_inv;    // inverse (pseudo-inverse where singular)
    std::vector<double> dist;   // dist(q, SO(n)) in the frame blockdiag(g, I)
    std::vector<int> singular_nodes;
    double violation_max = 0.0;
    double violation_mean_sq = 0.0;  // weighted mean of dist^2
};

QField assemble_q(const ReducedState& state, const ScenarioSpec& s);
QField assemble_q(const ReducedState& state, const SurfaceFields& fields);

/// Finite-difference dF at a node (n x m).
MatN surface_derivative(const ReducedState& state, int node);

struct CovariantDerivative {
    /// Per node, n x (m k): column a k + u = (nabla_a q_perp)(e_u).
    std::vector<Eigen::MatrixXd> values;
    std::vector<char> one_sided;
};

CovariantDerivative covariant_derivative_qperp(const ReducedState& state, const ScenarioSpec& s);
CovariantDerivative covariant_derivative_qperp(const ReducedState& state, const SurfaceFields& fields);

/// Pointwise limit density split into its two squared norms.
struct LimitDensity {
    double tangential = 0.0;  // |P_par o nabla q_perp - II|^2
    double normal = 0.0;      // |P_perp o nabla q_perp|^2
    double value(double kap) const { return 0.5 * kap * (2.0 * tangential + normal); }
};

/// Coordinate-free form. `nabla` is n x (m k) as above.
LimitDensity limit_density(const MatN& q_inv, const Eigen::MatrixXd& nabla, const MatN& g, const MatN& g_inv,
                           const std::vector<MatN>& shape);

/// Index-notation form: the contraction e_{ag} g^{ab} g^{ut} (...)(...) plus
/// the mixed-index second term, evaluated literally with explicit loops.
/// Agrees with limit_density(...).value(kappa) when q is an isometry and
/// the lowered q_par^T nabla q_perp is symmetric.
double limit_density_index_form(const MatN& q, const MatN& q_inv, const Eigen::MatrixXd& nabla, const MatN& g_inv,
                                const std::vector<MatN>& shape, double kap);

struct LimitMode {
    enum class Kind { Strict, Penalized };
    Kind kind = Kind::Strict;
    double tol = 1e-6;   // strict: max-node dist(q, SO(n))
    double beta = 1e3;   // penalized: weight of the mean dist^2

    static LimitMode strict(double tol = 1e-6) { return {Kind::Strict, tol, 0.0}; }
    static LimitMode penalized(double beta = 1e3) { return {Kind::Penalized, 0.0, beta}; }
};

/// E_lim by mesh quadrature. Strict mode yields an infinite report when the
/// constraint fails anywhere; penalized mode adds beta * mean dist^2.
/// Terms: "tangential", "normal" (each already multiplied by its kappa
/// factor), "limit" (their sum), "penalty".
EnergyReport eval_Elim(const ReducedState& state, const ScenarioSpec& s, LimitMode mode);
EnergyReport eval_Elim(const ReducedState& state, const SurfaceFields& fields, LimitMode mode);

struct ReducedGradient {
    Eigen::MatrixXd F;
    Eigen::MatrixXd qperp;
};

/// Gradient of the limit term plus beta * mean dist^2 (beta = 0 in strict mode).
ReducedGradient grad_Elim(const ReducedState& state, const ScenarioSpec& s, LimitMode mode);

/// Objective (limit + beta * mean dist^2) and its gradient in one pass.
double eval_grad_Elim(const ReducedState& state, const SurfaceFields& fields, double beta, ReducedGradient* grad);

/// Pointwise objective density (limit + beta dist^2) at `node` as a function
/// of q = [dF | q_perp] and nabla q_perp, with its partial derivatives.
/// eval_grad_Elim is the weighted sum of these densities.
double limit_density_jet(const SurfaceFields& fields, int node, double beta, const MatN& q, const Eigen::MatrixXd& nabla,
                         MatN* d_q = nullptr, Eigen::MatrixXd* d_nabla = nullptr);

/// Strict-mode tolerance that accounts for finite-difference truncation of
/// analytic states: max(1e-6, h_max^2), h_max the largest mesh spacing.
double discretization_tolerance(const SurfaceMesh& mesh);

}  // namespace thinlimit
