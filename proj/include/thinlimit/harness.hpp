#pragma once

#include "thinlimit/energy3d.hpp"
#include "thinlimit/optimize.hpp"
#include "thinlimit/reduced.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace thinlimit {

struct GammaRow {
    double h = 0.0;
    double min_Eh = 0.0;
    double Elim_star = 0.0;   // limit term of the reduced minimizer (same for every row)
    double gap = 0.0;         // |min_Eh - Elim_star|
    double recovery_Eh = 0.0; // E_h of the recovery sequence of the reduced minimizer
    double runtime = 0.0;     // seconds; not part of any file output
    std::string status;       // bulk optimizer status, or "failed"
    std::string failure;      // exception text when the row failed
    bool failed() const { return status == "failed"; }
};

struct GammaOptions {
    OptimizeOptions optimize;
    int normal_resolution = 5;
};

struct GammaSweep {
    ReducedResult reduced;
    bool reduced_failed = false;
    std::string reduced_failure;
    std::vector<GammaRow> rows;
};

/// One minimize_reduced run from `init`, then for every h a recovery
/// sequence on a fresh tubular grid and minimize_bulk warm-started from it.
/// h_list must be strictly decreasing with at least three entries. Failures
/// are recorded per row instead of aborting the sweep.
GammaSweep gamma_sweep(const ScenarioSpec& s, const ReducedState& init, const std::vector<double>& h_list,
                       const GammaOptions& options);

struct RigidityReport {
    std::vector<MatN> q;          // per surface node, orthonormal frame
    double lhs = 0.0;             // mean |df o Pi - pi^* q|^2 over the tube
    double energy = 0.0;          // E_h of the probed state
    double ratio = 0.0;           // lhs / (h^2 (E_h + 1))
    double grad_q = 0.0;          // mean |grad q|^2 over the surface
    double grad_ratio = 0.0;      // grad_q / (E_h + 1)
    double boundary_fraction = 0; // share of lhs within chart distance sqrt(h) of the boundary
};

/// q per surface node = nearest rotation of the fiber average of df J^{-1}.
RigidityReport rigidity_probe(const BulkState& state);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares of log(value) against log(h). Needs >= 3 pairs, all positive.
RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

/// Volume asymptotics of a tube: |Omega_h| - |S| nu_k h^k over h_list and the
/// fitted slope of the residual (NaN when every residual is at roundoff).
struct VolumeAsymptotics {
    std::vector<double> residual;
    double slope = 0.0;
    bool at_roundoff = false;
};
VolumeAsymptotics volume_asymptotics(const ScenarioSpec& s, int resolution, int normal_resolution,
                                     const std::vector<double>& h_list);

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Invariant suite behind the `check` subcommand.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace thinlimit
