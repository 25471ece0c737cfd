#include "thinlimit/rodsolver.hpp"
#include "thinlimit/rotations.hpp"

#include <cmath>

namespace thinlimit {

namespace {

// q' = q A(s) with A skew: column 0 carries T', column u + 1 carries N_u'.
MatN generator(const ScenarioSpec& rod, double s)
{
    const VecN x = VecN::Constant(1, s);
    const std::vector<MatN> ii = eval_ii(rod, x);
    const std::vector<MatN> omega = eval_normal_connection(rod, x);
    const int k = rod.codim;
    MatN a = MatN::Zero(k + 1, k + 1);
    for (int u = 0; u < k; ++u) {
        a(u + 1, 0) = -ii[u](0, 0);
        a(0, u + 1) = ii[u](0, 0);
        for (int v = 0; v < k; ++v) a(v + 1, u + 1) = omega[0](v, u);
    }
    return a;
}

}  // namespace

RodIntegration integrate_frame(const ScenarioSpec& rod, const MatN& initial_frame, const VecN& initial_point,
                               const RodOptions& options)
{
    if (rod.chart_dim() != 1) throw ConfigError("integrate_frame: scenario is not a rod");
    const int n = rod.dim_ambient, k = rod.codim;
    if (initial_frame.rows() != n || initial_frame.cols() != n || initial_point.size() != n)
        throw ConfigError("integrate_frame: initial data has the wrong size");
    if ((initial_frame.transpose() * initial_frame - MatN::Identity(n, n)).norm() > 1e-12 ||
        initial_frame.determinant() < 0.0)
        throw ConfigError("integrate_frame: initial frame is not in SO(n)");
    if (options.steps < 16) throw ConfigError("integrate_frame: at least 16 steps required");

    auto mesh = build_surface_mesh(rod, options.steps);
    for (int i = 0; i < mesh->size(); ++i)
        if (std::abs(eval_metric(rod, mesh->nodes[i])(0, 0) - 1.0) > 1e-12)
            throw ConfigError("integrate_frame: rod chart must be unit speed");

    RodIntegration out;
    out.state = make_reduced_state(mesh, n, k);
    out.frames.resize(mesh->size());
    const double ds = mesh->spacing[0];
    const double s0 = rod.chart_domain.lo(0);

    MatN q = initial_frame;
    Eigen::VectorXd f = initial_point;
    auto store = [&](int i) {
        out.frames[i] = q;
        out.state.F.col(i) = f;
        out.state.normal_block(i) = q.rightCols(k);
        out.max_orthogonality_defect =
            std::max(out.max_orthogonality_defect, (q.transpose() * q - MatN::Identity(n, n)).norm());
    };
    store(0);
    for (int i = 1; i < mesh->size(); ++i) {
        const double s = s0 + (i - 1) * ds;
        const MatN a1 = generator(rod, s), a2 = generator(rod, s + 0.5 * ds), a4 = generator(rod, s + ds);
        const MatN k1 = q * a1;
        const MatN q2 = q + 0.5 * ds * k1;
        const MatN k2 = q2 * a2;
        const MatN q3 = q + 0.5 * ds * k2;
        const MatN k3 = q3 * a2;
        const MatN q4 = q + ds * k3;
        const MatN k4 = q4 * a4;
        f += ds / 6.0 * (q.col(0) + 2.0 * q2.col(0) + 2.0 * q3.col(0) + q4.col(0));
        q += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (options.reorthonormalize) q = nearest_rotation(q);
        if (!q.allFinite() || !f.allFinite()) throw EvaluationError("integrate_frame: non-finite state");
        store(i);
    }
    return out;
}

ScenarioSpec rod_scenario_spec(const RodScenario& rod)
{
    if (!(rod.length > 0.0)) throw ConfigError("rod: length must be positive");
    if (!rod.curvature_fn || !rod.torsion_fn) throw ConfigError("rod: curvature and torsion are required");
    ScenarioSpec s;
    s.family = "rod";
    s.codim = 2;
    s.chart_domain = {VecN::Zero(1), VecN::Constant(1, rod.length)};
    s.metric_fn = [](const VecN&) { return MatN(MatN::Identity(1, 1)); };
    s.ii_fn = [f = rod.curvature_fn](const VecN& x) {
        const Eigen::Vector2d c = f(x(0));
        return std::vector<MatN>{MatN::Constant(1, 1, c(0)), MatN::Constant(1, 1, c(1))};
    };
    s.normal_connection_fn = [f = rod.torsion_fn](const VecN& x) {
        const double tau = f(x(0));
        MatN w = MatN::Zero(2, 2);
        w(1, 0) = tau;
        w(0, 1) = -tau;
        return std::vector<MatN>{w};
    };
    s.bulk_mode = BulkMode::SyntheticExpansion;
    return s;
}

RodIntegration integrate_frame(const RodScenario& rod, const RodOptions& options)
{
    return integrate_frame(rod_scenario_spec(rod), rod.initial_frame, rod.initial_point, options);
}

}  // namespace thinlimit
