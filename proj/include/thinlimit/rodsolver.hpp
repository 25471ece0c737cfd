#pragma once

#include "thinlimit/reduced.hpp"

#include <functional>

namespace thinlimit {

/// Unit-speed rod in R^3 with general curvature and torsion profiles.
struct RodScenario {
    double length = 6.283185307179586;
    std::function<Eigen::Vector2d(double)> curvature_fn = [](double) { return Eigen::Vector2d(1.0, 0.0); };
    std::function<double(double)> torsion_fn = [](double) { return 0.0; };
    MatN initial_frame = MatN::Identity(3, 3);
    VecN initial_point = VecN::Zero(3);
};

/// Chart [0, length], g = 1, II = curvature_fn, omega = [[0, -tau], [tau, 0]].
ScenarioSpec rod_scenario_spec(const RodScenario& rod);

struct RodOptions {
    int steps = 1000;
    /// Project the frame back onto SO(n) after every step.
    bool reorthonormalize = true;
};

struct RodIntegration {
    ReducedState state;                  // F and (N_1, ..., N_k) at the step nodes
    std::vector<MatN> frames;            // [T | N_1 ... N_k] per node
    double max_orthogonality_defect = 0; // max over nodes of |q^T q - I|
};

/// Integrates the frame equations of a unit-speed curve with curvatures
/// II_u(s) and normal connection omega(s):
///   T' = -sum_u II_u N_u,   N_u' = II_u T + sum_v omega(v, u) N_v,   F' = T
/// with classical RK4 on the uniform mesh of the scenario's chart interval.
/// `initial_frame` must be in SO(n) to 1e-12.
RodIntegration integrate_frame(const ScenarioSpec& rod, const MatN& initial_frame, const VecN& initial_point,
                               const RodOptions& options = {});
RodIntegration integrate_frame(const RodScenario& rod, const RodOptions& options = {});

}  // namespace thinlimit
