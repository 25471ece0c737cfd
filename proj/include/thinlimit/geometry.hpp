#pragma once

#include "thinlimit/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace thinlimit {

enum class BulkMode {
    Embedded,           // tube given by an explicit embedding into R^n
    ProductPlate,       // g|_S (+) flat normal block, II = 0
    SyntheticExpansion, // second-order normal expansion built from (g|_S, II, normal connection)
};

std::string to_string(BulkMode mode);

/// Axis-aligned chart box.
struct ChartBox {
    VecN lo;
    VecN hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double extent(int axis) const { return hi(axis) - lo(axis); }
    double max_extent() const { return (hi - lo).maxCoeff(); }
    bool contains(const VecN& x, double slack = 1e-12) const;
};

/// Analytic description of the slender body. All callables are pure.
struct ScenarioSpec {
    std::string family;
    int dim_ambient = 3;
    int codim = 1;
    ChartBox chart_domain;

    /// g|_S in chart coordinates (m x m).
    std::function<MatN(const VecN&)> metric_fn;
    /// Lowered components of II, one symmetric m x m matrix per normal direction.
    std::function<std::vector<MatN>(const VecN&)> ii_fn;
    /// Normal connection: one skew k x k matrix per chart direction a, with
    /// (nabla_a e_v) = sum_u omega_a(u, v) e_u.
    std::function<std::vector<MatN>(const VecN&)> normal_connection_fn;

    BulkMode bulk_mode = BulkMode::ProductPlate;
    /// Embedded mode only: Phi(x, xi) and its Jacobian (chart columns, then normal columns).
    std::function<VecN(const VecN&, const VecN&)> embedding;
    std::function<MatN(const VecN&, const VecN&)> embedding_jacobian;

    /// Chart boundary points where det g vanishes (polar charts) are accepted
    /// as zero-weight nodes instead of raising.
    bool allow_degenerate_boundary = false;

    int chart_dim() const { return dim_ambient - codim; }
};

MatN eval_metric(const ScenarioSpec& s, const VecN& x);
std::vector<MatN> eval_ii(const ScenarioSpec& s, const VecN& x);
std::vector<MatN> eval_normal_connection(const ScenarioSpec& s, const VecN& x);

/// Shape operators S_u = g^{-1} II_u (II with one index raised).
std::vector<MatN> shape_operators(const ScenarioSpec& s, const VecN& x);

struct Christoffel {
    /// gamma[a](b, c) = Gamma^a_{bc}
    std::vector<MatN> gamma;
    bool one_sided = false;
};

/// Christoffel symbols of g|_S by central differences with step 1e-5 * extent;
/// falls back to one-sided second-order stencils within a step of the boundary.
Christoffel christoffel(const ScenarioSpec& s, const VecN& x);

/// Bulk frame J(x, xi) with G = J^T J and J(x, 0) = blockdiag(E, I_k),
/// where E is the upper Cholesky factor of g|_S. Its inverse orthonormalizes
/// the bulk metric; df J^{-1} is df composed with radial parallel transport,
/// expressed in an orthonormal frame at the base point.
MatN bulk_frame(const ScenarioSpec& s, const VecN& x, const VecN& xi);

/// G(x, xi) = J^T J. Throws GeometryError when not SPD.
MatN eval_bulk_metric(const ScenarioSpec& s, const VecN& x, const VecN& xi);

/// Derivative stencil (up to three taps).
struct Stencil {
    std::array<int, 3> node{};
    std::array<double, 3> coeff{};
    int taps = 0;
    bool one_sided = false;
};

struct SurfaceMesh {
    int chart_dim = 0;
    std::vector<int> counts;     // nodes per axis
    std::vector<double> spacing; // per axis
    VecN origin;
    std::vector<VecN> nodes;
    std::vector<double> flat_weights;  // trapezoid weights in chart coordinates
    std::vector<double> quad_weights;  // flat weight * sqrt(det g)
    std::vector<char> boundary_mask;
    std::vector<char> degenerate_mask; // zero-weight polar nodes
    std::vector<std::vector<Stencil>> derivative; // [axis][node]

    int size() const { return static_cast<int>(nodes.size()); }
    double total_weight() const;
    int index(const std::vector<int>& multi) const;
    std::vector<int> multi_index(int node) const;
    bool same_layout(const SurfaceMesh& other) const;
    /// Node nearest to the chart center (used to pin gauges).
    int center_node() const;
};

/// Structured tensor grid with `resolution` intervals per axis.
std::shared_ptr<const SurfaceMesh> build_surface_mesh(const ScenarioSpec& s, int resolution);
std::shared_ptr<const SurfaceMesh> build_surface_mesh(const ScenarioSpec& s, const std::vector<int>& resolution);

struct TubularGrid {
    std::shared_ptr<const SurfaceMesh> base;
    double h = 0.0;
    int codim = 1;
    int normal_resolution = 0;
    double normal_spacing = 0.0;
    std::vector<VecN> normal_nodes;
    std::vector<double> normal_weights; // flat fiber weights, sum = nu_k h^k
    std::vector<std::vector<Stencil>> normal_derivative; // [u][normal node]

    // Per bulk node b = surface * normal_count() + j.
    std::vector<double> bulk_weights;
    std::vector<MatN> frame;     // J
    std::vector<MatN> frame_inv; // J^{-1}
    std::vector<char> active;    // false on degenerate surface nodes

    int normal_count() const { return static_cast<int>(normal_nodes.size()); }
    int size() const { return base->size() * normal_count(); }
    int bulk_index(int surface, int normal) const { return surface * normal_count() + normal; }
    double total_weight() const;
    /// Index of the normal node xi = 0.
    int zero_section() const;
};

/// Tube of half-thickness h over `mesh`. k = 1: `normal_resolution` (odd,
/// >= 3) Simpson nodes on [-h, h]. k >= 2: tensor grid clipped to the ball,
/// weights corrected so that 1 and |xi|^2 integrate exactly.
TubularGrid build_tubular_grid(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh,
                               double h, int normal_resolution);

/// Volume of the unit k-ball.
double unit_ball_volume(int k);

/// Largest |g - F^* e| over mesh nodes at xi = 0 (Embedded mode only).
double embedding_metric_defect(const ScenarioSpec& s, const SurfaceMesh& mesh);

}  // namespace thinlimit
