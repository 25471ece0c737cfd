#include "support.hpp"

#include "thinlimit/harness.hpp"
#include "thinlimit/rodsolver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace thinlimit;
using namespace testsupport;

TEST_SUITE("rodsolver")
{
    TEST_CASE("zero curvature and torsion: straight segment with a constant frame")
    {
        Rng rng(13);
        RodScenario rod;
        rod.length = 2.0;
        rod.curvature_fn = [](double) { return Eigen::Vector2d::Zero(); };
        rod.initial_frame = haar_rotation(3, rng);
        rod.initial_point = Eigen::Vector3d(1, 2, 3);
        const RodIntegration r = integrate_frame(rod, {100, true});
        for (int i = 0; i <= 100; ++i) {
            CHECK((r.frames[i] - rod.initial_frame).norm() < 1e-13);
            const VecN expect = rod.initial_point + r.state.mesh->nodes[i](0) * rod.initial_frame.col(0);
            CHECK((r.state.F.col(i) - expect).norm() < 1e-13);
        }
    }

    TEST_CASE("unit curvature over 2 pi closes the circle")
    {
        const RodIntegration r = integrate_frame(RodScenario{}, {6283, true});
        CHECK((r.state.F.col(6283) - r.state.F.col(0)).norm() <= 1e-6);
        // every point at distance 1 from the center of curvature
        const VecN center = r.state.F.leftCols(6283).rowwise().mean();
        for (int i = 0; i <= 6283; i += 97) CHECK((r.state.F.col(i) - center).norm() == doctest::Approx(1.0).epsilon(1e-5));
    }

    TEST_CASE("helix radius and pitch")
    {
        // chord^2(s) = 2 R^2 (1 - cos w s) + v^2 s^2, independent of frame orientation
        for (auto [k0, t0] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
            const double w = std::hypot(k0, t0), period = 2 * std::numbers::pi / w;
            RodScenario rod;
            rod.length = period;
            rod.curvature_fn = [k0](double) { return Eigen::Vector2d(k0, 0.0); };
            rod.torsion_fn = [t0](double) { return t0; };
            const RodIntegration r = integrate_frame(rod, {4000, true});
            const double v = (r.state.F.col(4000) - r.state.F.col(0)).norm() / period;
            const double half = (r.state.F.col(2000) - r.state.F.col(0)).squaredNorm();
            const double radius = 0.5 * std::sqrt(half - v * v * period * period / 4);
            CHECK(std::abs(radius - k0 / (w * w)) <= 1e-5);
            CHECK(std::abs(v * period - 2 * std::numbers::pi * t0 / (w * w)) <= 1e-5);
        }
    }

    TEST_CASE("fourth-order convergence of the endpoint")
    {
        RodScenario rod;
        rod.length = 3.0;
        rod.curvature_fn = [](double s) { return Eigen::Vector2d(1 + 0.5 * std::sin(s), 0.3 * std::cos(2 * s)); };
        rod.torsion_fn = [](double s) { return 0.4 + 0.2 * s; };
        const VecN ref = integrate_frame(rod, {12800, true}).state.F.col(12800);
        std::vector<std::pair<double, double>> pts;
        for (int n : {25, 50, 100, 200}) pts.emplace_back(1.0 / n, (integrate_frame(rod, {n, true}).state.F.col(n) - ref).norm());
        CHECK(rate_fit(pts).slope == doctest::Approx(4.0).epsilon(0.075));
    }

    TEST_CASE("without projection the frame drifts off SO(3); with it the drift is roundoff")
    {
        RodScenario rod;
        rod.length = 20.0;
        rod.curvature_fn = [](double s) { return Eigen::Vector2d(2 + std::sin(s), 1.0); };
        rod.torsion_fn = [](double) { return 1.5; };
        const double free_drift = integrate_frame(rod, {40, false}).max_orthogonality_defect;
        const double projected = integrate_frame(rod, {40, true}).max_orthogonality_defect;
        CHECK(projected < 1e-13);
        CHECK(free_drift > 1e-6);
        CHECK(free_drift > 100 * projected);
    }

    TEST_CASE("property: rotating the initial frame rotates the solution")
    {
        Rng rng(14);
        RodScenario rod;
        rod.curvature_fn = [](double s) { return Eigen::Vector2d(std::cos(s), 0.5); };
        rod.torsion_fn = [](double s) { return s; };
        const RodIntegration base = integrate_frame(rod, {200, true});
        for (int t = 0; t < 3; ++t) {
            RodScenario moved = rod;
            const MatN r = haar_rotation(3, rng);
            moved.initial_frame = r;
            const RodIntegration m = integrate_frame(moved, {200, true});
            for (int i = 0; i <= 200; i += 20) {
                CHECK((m.frames[i] - r * base.frames[i]).norm() < 1e-12);
                CHECK((m.state.F.col(i) - r * base.state.F.col(i)).norm() < 1e-12);
            }
        }
    }

    TEST_CASE("integrated frames have vanishing limit energy")
    {
        RodScenario rod;
        rod.length = 2.0;
        rod.curvature_fn = [](double) { return Eigen::Vector2d(1.0, 0.5); };
        rod.torsion_fn = [](double) { return 0.7; };
        const RodIntegration r = integrate_frame(rod, {2000, true});
        const EnergyReport e =
            eval_Elim(r.state, rod_scenario_spec(rod), LimitMode::strict(discretization_tolerance(*r.state.mesh)));
        REQUIRE(e.value);
        CHECK(*e.value <= 1e-10);
    }

    TEST_CASE("invalid inputs are configuration errors")
    {
        RodScenario rod;
        CHECK_THROWS_AS(integrate_frame(rod, {8, true}), ConfigError);
        rod.initial_frame = 2.0 * MatN::Identity(3, 3);
        CHECK_THROWS_AS(integrate_frame(rod, {100, true}), ConfigError);
        rod.initial_frame = MatN::Identity(3, 3);
        rod.initial_frame(2, 2) = -1.0;
        CHECK_THROWS_AS(integrate_frame(rod, {100, true}), ConfigError);
    }
}
