#pragma once

#include "thinlimit/energy3d.hpp"
#include "thinlimit/reduced.hpp"

#include <cstdint>
#include <random>

namespace thinlimit {

using Rng = std::mt19937_64;

/// F(x) = (x, 0), q_perp = (e_{m+1}, ..., e_n).
ReducedState chart_identity_state(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh);

/// F(x) = Phi(x, 0), q_perp(e_u) = d Phi / d xi_u (x, 0). Embedded scenarios only.
ReducedState embedded_state(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh);

/// Chart (s, z) of a cylinder of unit metric wrapped onto a cylinder of the
/// given radius: F = (R cos(s/R), R sin(s/R), z), q_perp = (cos(s/R), sin(s/R), 0).
ReducedState rolled_cylinder_state(std::shared_ptr<const SurfaceMesh> mesh, double radius);

/// Same chart laid flat in the plane x = 1 with normal e_x (det [dF | q_perp] = +1).
ReducedState flat_cylinder_state(std::shared_ptr<const SurfaceMesh> mesh);

/// Adds independent N(0, sigma^2) noise to every entry of F and q_perp.
void perturb(ReducedState& state, double sigma, Rng& rng);
void perturb(BulkState& state, double sigma, Rng& rng);

/// f(x, xi) = (x, xi) on the tube chart.
BulkState chart_identity_bulk(std::shared_ptr<const TubularGrid> grid);

/// f(x, xi) = Phi(x, xi). Embedded scenarios only.
BulkState embedded_bulk(const ScenarioSpec& s, std::shared_ptr<const TubularGrid> grid);

}  // namespace thinlimit
