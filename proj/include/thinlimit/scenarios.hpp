#pragma once

#include "thinlimit/geometry.hpp"

#include <string>
#include <vector>

namespace thinlimit {

/// Parameters of the builtin scenario families. Unused fields are ignored by
/// families that do not need them.
struct ScenarioParams {
    std::string family = "euclid_plate";
    std::vector<double> lo;       // chart box; empty = family default
    std::vector<double> hi;
    double radius = 1.0;          // cylinder_shell, sphere_cap_shell
    double curvature = -1.0;      // hyperbolic_plate: Gaussian curvature K < 0
    std::vector<double> rod_curvature{1.0, 0.0}; // rod: II components per normal
    double torsion = 0.0;         // rod: normal-connection coefficient
    double length = 6.283185307179586;  // rod
};

/// Known family names, in a fixed order.
const std::vector<std::string>& scenario_families();

ScenarioSpec make_scenario(const ScenarioParams& params);

/// Flat slab (x, y, t) -> (x, y, t).
ScenarioSpec euclid_plate(const VecN& lo, const VecN& hi);
/// g = dx^2 + exp(2 sqrt(-K) x) dy^2 with II = 0 over a product bulk.
ScenarioSpec hyperbolic_plate(double gaussian_curvature, const VecN& lo, const VecN& hi);
/// Arc-length chart (s, z) on a cylinder of radius r, outward normal.
ScenarioSpec cylinder_shell(double radius, const VecN& lo, const VecN& hi);
/// Polar chart (theta, phi) on a sphere of radius R, outward normal.
ScenarioSpec sphere_cap_shell(double radius, const VecN& lo, const VecN& hi);
/// Arc-length interval [0, length] with constant II components and torsion.
ScenarioSpec rod_scenario(double length, const std::vector<double>& curvature, double torsion);

}  // namespace thinlimit
