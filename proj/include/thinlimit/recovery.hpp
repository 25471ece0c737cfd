#pragma once

#include "thinlimit/energy3d.hpp"
#include "thinlimit/reduced.hpp"

namespace thinlimit {

/// f_h(x, xi) = F(x) + q_perp(x) xi at every bulk node.
BulkState build_recovery(const ReducedState& state, std::shared_ptr<const TubularGrid> grid);

struct RecoveryDifferential {
    /// dF(X_par) + q_perp(X_perp) + (nabla_{X_par} q_perp)(xi), columns in the
    /// horizontal (parallel-transported) chart frame followed by e_u.
    MatN horizontal;
    /// Same map against the coordinate directions of the tube chart, i.e.
    /// what finite differences of build_recovery approximate.
    MatN coordinate;
    bool one_sided = false;
};

RecoveryDifferential recovery_differential(const ReducedState& state, const ScenarioSpec& s, int node,
                                           const VecN& xi);

/// Mean-square discrepancies of a bulk state against a limit pair:
/// mean |f - F o pi|^2 and mean |df o Pi - (dF (+) q_perp)|^2 over the tube.
struct ReducedConvergence {
    double position = 0.0;
    double derivative = 0.0;
};

ReducedConvergence reduced_convergence_metrics(const BulkState& bulk, const ReducedState& limit);

}  // namespace thinlimit
