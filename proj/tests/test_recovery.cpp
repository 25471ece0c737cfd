#include "support.hpp"

#include "thinlimit/harness.hpp"
#include "thinlimit/recovery.hpp"
#include "thinlimit/rodsolver.hpp"

#include <doctest.h>

#include <cmath>

using namespace thinlimit;
using namespace testsupport;

namespace {

std::shared_ptr<const TubularGrid> tube(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh, double h,
                                        int nres)
{
    return std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, h, nres));
}

// Exact coordinate differential of (s, z, t) -> (1 + t)(cos s, sin s, 0) + (0, 0, z).
MatN rolled_differential(double s, double t)
{
    MatN d = MatN::Zero(3, 3);
    d.col(0) << -(1 + t) * std::sin(s), (1 + t) * std::cos(s), 0.0;
    d.col(1) << 0.0, 0.0, 1.0;
    d.col(2) << std::cos(s), std::sin(s), 0.0;
    return d;
}

double max_differential_error(int res, double t)
{
    const ScenarioSpec s = family("cylinder_shell");
    const ReducedState st = rolled_cylinder_state(build_surface_mesh(s, res), 1.0);
    VecN xi(1);
    xi << t;
    double worst = 0.0;
    for (int i = 0; i < st.mesh->size(); ++i) {
        const MatN d = recovery_differential(st, s, i, xi).coordinate;
        worst = std::max(worst, (d - rolled_differential(st.mesh->nodes[i](0), t)).norm());
    }
    return worst;
}

}  // namespace

TEST_SUITE("recovery")
{
    TEST_CASE("flat identity state maps (x, t) to (x1, x2, t)")
    {
        const ScenarioSpec s = family("euclid_plate");
        auto mesh = build_surface_mesh(s, 6);
        auto grid = tube(s, mesh, 0.1, 5);
        const BulkState b = build_recovery(chart_identity_state(s, mesh), grid);
        for (int i = 0; i < mesh->size(); ++i)
            for (int j = 0; j < grid->normal_count(); ++j) {
                const VecN p = b.values.col(grid->bulk_index(i, j));
                CHECK(p(0) == doctest::Approx(mesh->nodes[i](0)));
                CHECK(p(1) == doctest::Approx(mesh->nodes[i](1)));
                CHECK(p(2) == doctest::Approx(grid->normal_nodes[j](0)));
            }
    }

    TEST_CASE("rolled strip: the center fiber is (1 + t, 0, 0)")
    {
        const ScenarioSpec s = family("cylinder_shell");
        auto mesh = build_surface_mesh(s, 16);
        auto grid = tube(s, mesh, 0.2, 5);
        const BulkState b = build_recovery(rolled_cylinder_state(mesh, 1.0), grid);
        const int c = mesh->center_node();
        REQUIRE(mesh->nodes[c].norm() < 1e-14);
        for (int j = 0; j < grid->normal_count(); ++j) {
            const double t = grid->normal_nodes[j](0);
            CHECK((b.values.col(grid->bulk_index(c, j)) - Eigen::Vector3d(1 + t, 0, 0)).norm() < 1e-14);
        }
    }

    TEST_CASE("rod tube: f = F + h q_perp nu")
    {
        const RodIntegration rod = integrate_frame(RodScenario{}, {64, true});
        const ScenarioSpec s = rod_scenario_spec(RodScenario{});
        auto grid = tube(s, rod.state.mesh, 0.05, 5);
        const BulkState b = build_recovery(rod.state, grid);
        for (int i = 0; i < rod.state.mesh->size(); i += 7)
            for (int j = 0; j < grid->normal_count(); ++j) {
                const VecN expect = rod.state.F.col(i) + rod.state.normal_block(i) * grid->normal_nodes[j];
                CHECK((b.values.col(grid->bulk_index(i, j)) - expect).norm() < 1e-14);
            }
    }

    TEST_CASE("mesh mismatch is a configuration error")
    {
        const ScenarioSpec s = family("euclid_plate");
        const ReducedState st = chart_identity_state(s, build_surface_mesh(s, 6));
        CHECK_THROWS_AS(build_recovery(st, tube(s, build_surface_mesh(s, 8), 0.1, 3)), ConfigError);
    }

    TEST_CASE("differential on the zero section is dF (+) q_perp")
    {
        const ScenarioSpec s = family("cylinder_shell");
        const ReducedState st = rolled_cylinder_state(build_surface_mesh(s, 12), 1.0);
        const QField q = assemble_q(st, s);
        for (int i = 0; i < st.mesh->size(); ++i) {
            const RecoveryDifferential d = recovery_differential(st, s, i, VecN::Zero(1));
            CHECK((d.coordinate - q.q[i]).norm() < 1e-14);
            CHECK((d.horizontal - q.q[i]).norm() < 1e-14);
        }
    }

    TEST_CASE("flat plate with constant normal: identity differential off the zero section")
    {
        const ScenarioSpec s = family("euclid_plate");
        const ReducedState st = chart_identity_state(s, build_surface_mesh(s, 6));
        VecN xi(1);
        xi << 0.07;
        for (int i = 0; i < st.mesh->size(); ++i)
            CHECK((recovery_differential(st, s, i, xi).coordinate - MatN::Identity(3, 3)).norm() < 1e-12);
    }

    TEST_CASE("rolled strip: angular column scales by (1 + t)")
    {
        const ScenarioSpec s = family("cylinder_shell");
        const ReducedState st = rolled_cylinder_state(build_surface_mesh(s, 16), 1.0);
        for (double t : {-0.2, 0.15}) {
            VecN xi(1);
            xi << t;
            for (int i = 0; i < st.mesh->size(); ++i) {
                const MatN d0 = recovery_differential(st, s, i, VecN::Zero(1)).coordinate;
                const MatN dt = recovery_differential(st, s, i, xi).coordinate;
                CHECK((dt.col(0) - (1 + t) * d0.col(0)).norm() < 1e-6);
            }
        }
    }

    TEST_CASE("discrete differential converges to the exact one at second order")
    {
        const double e1 = max_differential_error(8, 0.1), e2 = max_differential_error(16, 0.1),
                     e3 = max_differential_error(32, 0.1);
        CHECK(std::log2(e1 / e2) >= 1.9);
        CHECK(std::log2(e2 / e3) >= 1.9);
    }

    TEST_CASE("convergence metrics of a recovery: position h^2/3, derivative from the normal derivative")
    {
        const ScenarioSpec s = family("euclid_plate");
        auto mesh = build_surface_mesh(s, 6);
        const ReducedState st = chart_identity_state(s, mesh);
        const double h = 0.1;
        const ReducedConvergence c = reduced_convergence_metrics(build_recovery(st, tube(s, mesh, h, 5)), st);
        CHECK(c.position == doctest::Approx(h * h / 3.0).epsilon(1e-12));
        CHECK(c.derivative < 1e-20);
    }
}
