#include "support.hpp"

#include "thinlimit/geometry.hpp"
#include "thinlimit/harness.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <numbers>

using namespace thinlimit;
using namespace testsupport;

TEST_SUITE("geometry")
{
    TEST_CASE("flat plate metric is the identity and Christoffel symbols vanish")
    {
        const ScenarioSpec s = family("euclid_plate");
        const VecN x = vec2(0.3, 0.7);
        CHECK((eval_metric(s, x) - MatN::Identity(2, 2)).norm() == doctest::Approx(0.0));
        for (const MatN& g : christoffel(s, x).gamma) CHECK(g.norm() < 1e-12);
    }

    TEST_CASE("points outside the chart raise a domain error")
    {
        const ScenarioSpec s = family("euclid_plate");
        CHECK_THROWS_AS(eval_metric(s, vec2(1.5, 0.5)), DomainError);
        CHECK_THROWS_AS(eval_ii(s, vec2(-0.1, 0.5)), DomainError);
    }

    TEST_CASE("polar chart: metric diag(1, r^2) and its Christoffel symbols")
    {
        const ScenarioSpec s = polar_plane();
        const VecN x = vec2(2.0, 0.0);
        const MatN g = eval_metric(s, x);
        CHECK(g(0, 0) == doctest::Approx(1.0));
        CHECK(g(1, 1) == doctest::Approx(4.0));
        const Christoffel c = christoffel(s, x);
        CHECK(c.gamma[0](1, 1) == doctest::Approx(-2.0).epsilon(1e-6));
        CHECK(c.gamma[1](0, 1) == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(c.gamma[1](1, 0) == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(std::abs(c.gamma[0](0, 0)) < 1e-6);
        CHECK(std::abs(c.gamma[0](0, 1)) < 1e-6);
        CHECK(std::abs(c.gamma[1](0, 0)) < 1e-6);
        CHECK(std::abs(c.gamma[1](1, 1)) < 1e-6);
        CHECK_FALSE(c.one_sided);
    }

    TEST_CASE("round sphere: equator metric and Gamma^theta_phiphi")
    {
        const ScenarioSpec s = sphere_cap_shell(1.0, vec2(0.1, 0.0), vec2(1.7, 1.0));
        const MatN g = eval_metric(s, vec2(std::numbers::pi / 2, 0.5));
        CHECK(g(0, 0) == doctest::Approx(1.0));
        CHECK(g(1, 1) == doctest::Approx(1.0));
        const Christoffel c = christoffel(s, vec2(std::numbers::pi / 4, 0.5));
        CHECK(std::abs(c.gamma[0](1, 1) + 0.5) < 1e-6);
    }

    TEST_CASE("Christoffel symbols near the boundary are flagged one-sided")
    {
        const ScenarioSpec s = polar_plane();
        CHECK(christoffel(s, vec2(1.0, 0.0)).one_sided);
    }

    TEST_CASE("bulk metric on the zero section is blockdiag(g, I)")
    {
        for (const std::string& name : {"euclid_plate", "hyperbolic_plate", "cylinder_shell", "sphere_cap_shell"}) {
            const ScenarioSpec s = family(name);
            const VecN x = 0.5 * (s.chart_domain.lo + s.chart_domain.hi);
            MatN expect = MatN::Identity(3, 3);
            expect.topLeftCorner(2, 2) = eval_metric(s, x);
            CHECK((eval_bulk_metric(s, x, VecN::Zero(1)) - expect).norm() < 1e-12);
        }
    }

    TEST_CASE("cylinder offset surface metric is diag((1+t)^2, 1, 1)")
    {
        const ScenarioSpec s = family("cylinder_shell");
        for (double t : {-0.3, 0.1, 0.25}) {
            VecN xi(1);
            xi << t;
            const MatN g = eval_bulk_metric(s, vec2(0.2, -0.1), xi);
            MatN expect = MatN::Identity(3, 3);
            expect(0, 0) = (1 + t) * (1 + t);
            CHECK((g - expect).norm() < 1e-12);
        }
    }

    TEST_CASE("product plate bulk metric does not depend on the normal offset")
    {
        const ScenarioSpec s = family("hyperbolic_plate");
        const VecN x = vec2(0.1, -0.2);
        VecN xi(1);
        xi << 0.3;
        CHECK((eval_bulk_metric(s, x, xi) - eval_bulk_metric(s, x, VecN::Zero(1))).norm() < 1e-14);
    }

    TEST_CASE("metrics are symmetric positive definite at random points")
    {
        Rng rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (const std::string& name : {"hyperbolic_plate", "cylinder_shell", "sphere_cap_shell"}) {
            const ScenarioSpec s = family(name);
            for (int t = 0; t < 50; ++t) {
                VecN x = s.chart_domain.lo;
                for (int a = 0; a < 2; ++a) x(a) += u(rng) * s.chart_domain.extent(a);
                VecN xi(1);
                xi << 0.2 * (u(rng) - 0.5);
                const MatN g = eval_bulk_metric(s, x, xi);
                CHECK((g - g.transpose()).norm() < 1e-14);
                CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff() > 0.0);
            }
        }
    }

    TEST_CASE("unit square mesh: node count and total weight")
    {
        auto mesh = build_surface_mesh(family("euclid_plate"), 4);
        CHECK(mesh->size() == 25);
        CHECK(std::abs(mesh->total_weight() - 1.0) < 1e-12);
    }

    TEST_CASE("too coarse a mesh is a configuration error")
    {
        CHECK_THROWS_AS(build_surface_mesh(family("euclid_plate"), 1), ConfigError);
    }

    TEST_CASE("sphere cap area converges to pi")
    {
        const ScenarioSpec s = sphere_cap_shell(1.0, vec2(0.0, 0.0), vec2(std::numbers::pi / 3, 2 * std::numbers::pi));
        auto mesh = build_surface_mesh(s, 64);
        CHECK(std::abs(mesh->total_weight() - std::numbers::pi) < 1e-3);
    }

    TEST_CASE("flat tube of half-thickness 0.1 has volume 0.2")
    {
        const ScenarioSpec s = family("euclid_plate");
        auto mesh = build_surface_mesh(s, 8);
        const TubularGrid grid = build_tubular_grid(s, mesh, 0.1, 5);
        CHECK(std::abs(grid.total_weight() - 0.2) < 1e-10);
        CHECK(grid.normal_nodes[grid.zero_section()].norm() == 0.0);
    }

    TEST_CASE("over-thick cylinder tube is a geometry error")
    {
        const ScenarioSpec s = family("cylinder_shell");
        auto mesh = build_surface_mesh(s, 4);
        CHECK_THROWS_AS(build_tubular_grid(s, mesh, 1.5, 5), GeometryError);
    }

    TEST_CASE("bad normal resolution is a configuration error")
    {
        const ScenarioSpec s = family("euclid_plate");
        auto mesh = build_surface_mesh(s, 4);
        CHECK_THROWS_AS(build_tubular_grid(s, mesh, 0.1, 4), ConfigError);
        CHECK_THROWS_AS(build_tubular_grid(s, mesh, -0.1, 5), ConfigError);
    }

    TEST_CASE("fiber moments: k = 1 and k = 2 integrate |xi|^2 exactly")
    {
        // mean |xi|^2 over the k-ball of radius h is k h^2 / (k + 2)
        {
            const ScenarioSpec s = family("euclid_plate");
            auto mesh = build_surface_mesh(s, 4);
            const TubularGrid g = build_tubular_grid(s, mesh, 0.2, 5);
            double w = 0, m2 = 0;
            for (int j = 0; j < g.normal_count(); ++j) {
                w += g.normal_weights[j];
                m2 += g.normal_weights[j] * g.normal_nodes[j].squaredNorm();
            }
            CHECK(m2 / w == doctest::Approx(0.04 / 3.0).epsilon(1e-12));
        }
        {
            const ScenarioSpec s = family("rod");
            auto mesh = build_surface_mesh(s, 32);
            const TubularGrid g = build_tubular_grid(s, mesh, 0.1, 7);
            double w = 0, m2 = 0;
            for (int j = 0; j < g.normal_count(); ++j) {
                w += g.normal_weights[j];
                m2 += g.normal_weights[j] * g.normal_nodes[j].squaredNorm();
            }
            CHECK(m2 / w == doctest::Approx(0.01 / 2.0).epsilon(1e-12));
            CHECK(w == doctest::Approx(std::numbers::pi * 0.01).epsilon(1e-12));
        }
    }

    TEST_CASE("tube volume residual vanishes for flat product tubes")
    {
        const VolumeAsymptotics v = volume_asymptotics(family("euclid_plate"), 8, 5, {0.2, 0.1, 0.05});
        for (double r : v.residual) CHECK(std::abs(r) < 1e-12);
        CHECK(v.at_roundoff);
    }

    TEST_CASE("curved tube volume residual decays like h^3")
    {
        const VolumeAsymptotics v = volume_asymptotics(family("sphere_cap_shell"), 16, 5, {0.2, 0.1, 0.05});
        CHECK_FALSE(v.at_roundoff);
        CHECK(v.slope == doctest::Approx(3.0).epsilon(0.02));
    }
}
