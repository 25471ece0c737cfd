#include "thinlimit/states.hpp"

#include <cmath>

namespace thinlimit {

ReducedState chart_identity_state(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh)
{
    const int n = s.dim_ambient, m = s.chart_dim(), k = s.codim;
    ReducedState out = make_reduced_state(mesh, n, k);
    for (int i = 0; i < mesh->size(); ++i) {
        out.F.col(i).head(m) = mesh->nodes[i];
        out.normal_block(i) = Eigen::MatrixXd::Identity(n, n).rightCols(k);
    }
    return out;
}

ReducedState embedded_state(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh)
{
    if (s.bulk_mode != BulkMode::Embedded) throw ConfigError("embedded_state: scenario has no embedding");
    const int n = s.dim_ambient, k = s.codim;
    ReducedState out = make_reduced_state(mesh, n, k);
    const VecN zero = VecN::Zero(k);
    for (int i = 0; i < mesh->size(); ++i) {
        out.F.col(i) = s.embedding(mesh->nodes[i], zero);
        out.normal_block(i) = s.embedding_jacobian(mesh->nodes[i], zero).rightCols(k);
    }
    return out;
}

ReducedState rolled_cylinder_state(std::shared_ptr<const SurfaceMesh> mesh, double radius)
{
    if (mesh->chart_dim != 2) throw ConfigError("rolled_cylinder_state: needs a two-dimensional chart");
    if (!(radius > 0.0)) throw ConfigError("rolled_cylinder_state: radius must be positive");
    ReducedState out = make_reduced_state(mesh, 3, 1);
    for (int i = 0; i < mesh->size(); ++i) {
        const double s = mesh->nodes[i](0), z = mesh->nodes[i](1);
        const double c = std::cos(s / radius), sn = std::sin(s / radius);
        out.F.col(i) << radius * c, radius * sn, z;
        out.qperp.col(i) << c, sn, 0.0;
    }
    return out;
}

ReducedState flat_cylinder_state(std::shared_ptr<const SurfaceMesh> mesh)
{
    if (mesh->chart_dim != 2) throw ConfigError("flat_cylinder_state: needs a two-dimensional chart");
    ReducedState out = make_reduced_state(mesh, 3, 1);
    for (int i = 0; i < mesh->size(); ++i) {
        out.F.col(i) << 1.0, mesh->nodes[i](0), mesh->nodes[i](1);
        out.qperp.col(i) << 1.0, 0.0, 0.0;
    }
    return out;
}

namespace {

void add_noise(Eigen::MatrixXd& m, double sigma, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, sigma);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) += normal(rng);
}

}  // namespace

void perturb(ReducedState& state, double sigma, Rng& rng)
{
    add_noise(state.F, sigma, rng);
    add_noise(state.qperp, sigma, rng);
}

void perturb(BulkState& state, double sigma, Rng& rng)
{
    add_noise(state.values, sigma, rng);
}

BulkState chart_identity_bulk(std::shared_ptr<const TubularGrid> grid)
{
    const int m = grid->base->chart_dim, k = grid->codim;
    BulkState out = make_bulk_state(grid, m + k);
    for (int i = 0; i < grid->base->size(); ++i)
        for (int j = 0; j < grid->normal_count(); ++j) {
            const int b = grid->bulk_index(i, j);
            out.values.col(b).head(m) = grid->base->nodes[i];
            out.values.col(b).tail(k) = grid->normal_nodes[j];
        }
    return out;
}

BulkState embedded_bulk(const ScenarioSpec& s, std::shared_ptr<const TubularGrid> grid)
{
    if (s.bulk_mode != BulkMode::Embedded) throw ConfigError("embedded_bulk: scenario has no embedding");
    BulkState out = make_bulk_state(grid, s.dim_ambient);
    for (int i = 0; i < grid->base->size(); ++i)
        for (int j = 0; j < grid->normal_count(); ++j)
            out.values.col(grid->bulk_index(i, j)) = s.embedding(grid->base->nodes[i], grid->normal_nodes[j]);
    return out;
}

}  // namespace thinlimit
