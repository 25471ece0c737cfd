#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thinlimit {

struct TraceRecord {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double violation = 0.0;
};

/// Result of an energy evaluation or a minimization run.
struct EnergyReport {
    /// Empty means +infinity (constraint violated in strict mode); see
    /// `diagnostics` and `flagged_nodes` for why.
    std::optional<double> value;
    std::map<std::string, double> terms;
    double constraint_violation = 0.0;  // max-node dist(q, SO(n)) where applicable
    double grad_norm = 0.0;
    std::vector<TraceRecord> trace;
    std::vector<int> flagged_nodes;
    std::string diagnostics;

    bool infinite() const { return !value.has_value(); }
};

}  // namespace thinlimit
