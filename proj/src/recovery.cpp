#include "thinlimit/recovery.hpp"

namespace thinlimit {

BulkState build_recovery(const ReducedState& state, std::shared_ptr<const TubularGrid> grid)
{
    if (!grid || !state.mesh || !grid->base->same_layout(*state.mesh))
        throw ConfigError("build_recovery: tubular grid is not built over the state's mesh");
    if (grid->codim != state.codim()) throw ConfigError("build_recovery: codimension mismatch");
    BulkState out = make_bulk_state(grid, state.dim());
    const int nn = grid->normal_count();
    for (int i = 0; i < state.mesh->size(); ++i)
        for (int j = 0; j < nn; ++j)
            out.values.col(grid->bulk_index(i, j)) = state.F.col(i) + state.normal_block(i) * grid->normal_nodes[j];
    return out;
}

RecoveryDifferential recovery_differential(const ReducedState& state, const ScenarioSpec& s, int node,
                                           const VecN& xi)
{
    const SurfaceMesh& mesh = *state.mesh;
    const int n = state.dim(), m = mesh.chart_dim, k = state.codim();
    if (node < 0 || node >= mesh.size()) throw ConfigError("recovery_differential: node out of range");
    const std::vector<MatN> omega = eval_normal_connection(s, mesh.nodes[node]);
    const MatN dF = surface_derivative(state, node);
    const auto q = state.normal_block(node);
    RecoveryDifferential out;
    out.horizontal = MatN::Zero(n, n);
    out.coordinate = MatN::Zero(n, n);
    for (int a = 0; a < m; ++a) {
        const Stencil& st = mesh.derivative[a][node];
        out.one_sided = out.one_sided || st.one_sided;
        Eigen::VectorXd partial = Eigen::VectorXd::Zero(n);  // (d_a q_perp)(xi)
        for (int t = 0; t < st.taps; ++t) partial += st.coeff[t] * (state.normal_block(st.node[t]) * xi);
        const Eigen::VectorXd twist = q * (omega[a] * xi);
        out.horizontal.col(a) = dF.col(a) + partial - twist;
        out.coordinate.col(a) = dF.col(a) + partial;
    }
    out.horizontal.rightCols(k) = q;
    out.coordinate.rightCols(k) = q;
    return out;
}

ReducedConvergence reduced_convergence_metrics(const BulkState& bulk, const ReducedState& limit)
{
    const TubularGrid& grid = *bulk.grid;
    if (!grid.base->same_layout(*limit.mesh)) throw ConfigError("reduced_convergence_metrics: mesh mismatch");
    const int n = bulk.dim(), m = grid.base->chart_dim, k = grid.codim, nn = grid.normal_count();
    const int zero = grid.zero_section();
    ReducedConvergence out;
    double wsum = 0.0;
    for (int i = 0; i < grid.base->size(); ++i) {
        if (grid.base->degenerate_mask[i]) continue;
        MatN q(n, n);
        q.leftCols(m) = surface_derivative(limit, i);
        q.rightCols(k) = limit.normal_block(i);
        // Orthonormal base frame: J(x, 0)^{-1}.
        const MatN q_hat = q * grid.frame_inv[grid.bulk_index(i, zero)];
        for (int j = 0; j < nn; ++j) {
            const int b = grid.bulk_index(i, j);
            const double w = grid.bulk_weights[b];
            const MatN df_pi = bulk_derivative(bulk, b) * grid.frame_inv[b];
            out.position += w * (bulk.values.col(b) - limit.F.col(i)).squaredNorm();
            out.derivative += w * (df_pi - q_hat).squaredNorm();
            wsum += w;
        }
    }
    out.position /= wsum;
    out.derivative /= wsum;
    return out;
}

}  // namespace thinlimit
