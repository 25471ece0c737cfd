#include "thinlimit/energy3d.hpp"

#include "thinlimit/parallel.hpp"
#include "thinlimit/rotations.hpp"

#include <cmath>

namespace thinlimit {

namespace {

struct NodeTerm {
    double dist2 = 0.0;
    MatN grad_a;  // d dist^2 / dA (coordinate frame)
    bool fallback = false;
};

void check_state(const BulkState& state)
{
    if (!state.grid) throw EvaluationError("bulk state has no grid");
    if (state.values.cols() != state.grid->size())
        throw EvaluationError("bulk state shape does not match its grid");
    if (!state.values.allFinite()) throw EvaluationError("bulk state contains NaN or Inf");
}

double local_dist2(const MatN& a, const MatN& l)
{
    const SignedPolar p = signed_polar(a * l);
    return (p.singular.array() - 1.0).square().sum();
}

NodeTerm node_term(const MatN& a, const MatN& l, bool want_grad)
{
    NodeTerm t;
    const MatN a_hat = a * l;
    const SignedPolar p = signed_polar(a_hat);
    t.dist2 = (p.singular.array() - 1.0).square().sum();
    if (!want_grad) return t;
    if (!projection_ambiguous(p)) {
        t.grad_a = 2.0 * (a_hat - p.rotation) * l.transpose();
        return t;
    }
    t.fallback = true;
    const int n = static_cast<int>(a.rows());
    t.grad_a = MatN::Zero(n, n);
    const double step = 1e-7 * std::max(1.0, a.norm());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            MatN ap = a, am = a;
            ap(r, c) += step;
            am(r, c) -= step;
            t.grad_a(r, c) = (local_dist2(ap, l) - local_dist2(am, l)) / (2.0 * step);
        }
    return t;
}

double evaluate(const BulkState& state, Eigen::MatrixXd* gradient, std::vector<int>* fallback)
{
    check_state(state);
    const TubularGrid& grid = *state.grid;
    const int total = grid.size();
    std::vector<NodeTerm> terms(total);
    const bool want_grad = gradient != nullptr;
    parallel_for(total, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            if (!grid.active[b]) continue;
            terms[b] = node_term(bulk_derivative(state, static_cast<int>(b)), grid.frame_inv[b], want_grad);
        }
    });
    const double volume = grid.total_weight();
    const double scale = 1.0 / (grid.h * grid.h * volume);
    double acc = 0.0;
    for (int b = 0; b < total; ++b)
        if (grid.active[b]) acc += grid.bulk_weights[b] * terms[b].dist2;
    if (!want_grad) return acc * scale;

    const SurfaceMesh& mesh = *grid.base;
    const int m = mesh.chart_dim, k = grid.codim, nn = grid.normal_count();
    gradient->setZero(state.values.rows(), state.values.cols());
    for (int b = 0; b < total; ++b) {
        if (!grid.active[b]) continue;
        if (terms[b].fallback && fallback) fallback->push_back(b);
        const MatN g = terms[b].grad_a * (grid.bulk_weights[b] * scale);
        const int i = b / nn, j = b % nn;
        for (int a = 0; a < m; ++a) {
            const Stencil& st = mesh.derivative[a][i];
            for (int t = 0; t < st.taps; ++t) gradient->col(grid.bulk_index(st.node[t], j)) += st.coeff[t] * g.col(a);
        }
        for (int u = 0; u < k; ++u) {
            const Stencil& st = grid.normal_derivative[u][j];
            for (int t = 0; t < st.taps; ++t) gradient->col(grid.bulk_index(i, st.node[t])) += st.coeff[t] * g.col(m + u);
        }
    }
    return acc * scale;
}

}  // namespace

BulkState make_bulk_state(std::shared_ptr<const TubularGrid> grid, int n)
{
    BulkState s;
    s.values = Eigen::MatrixXd::Zero(n, grid->size());
    s.grid = std::move(grid);
    return s;
}

MatN bulk_derivative(const BulkState& state, int b)
{
    const TubularGrid& grid = *state.grid;
    const SurfaceMesh& mesh = *grid.base;
    const int n = state.dim(), m = mesh.chart_dim, k = grid.codim, nn = grid.normal_count();
    const int i = b / nn, j = b % nn;
    MatN a = MatN::Zero(n, m + k);
    for (int ax = 0; ax < m; ++ax) {
        const Stencil& st = mesh.derivative[ax][i];
        for (int t = 0; t < st.taps; ++t) a.col(ax) += st.coeff[t] * state.values.col(grid.bulk_index(st.node[t], j));
    }
    for (int u = 0; u < k; ++u) {
        const Stencil& st = grid.normal_derivative[u][j];
        for (int t = 0; t < st.taps; ++t) a.col(m + u) += st.coeff[t] * state.values.col(grid.bulk_index(i, st.node[t]));
    }
    return a;
}

EnergyReport eval_Eh(const BulkState& state)
{
    EnergyReport r;
    r.value = evaluate(state, nullptr, nullptr);
    r.terms["stretching"] = *r.value;
    return r;
}

BulkGradient grad_Eh(const BulkState& state)
{
    BulkGradient g;
    evaluate(state, &g.values, &g.fallback_nodes);
    return g;
}

double eval_grad_Eh(const BulkState& state, Eigen::MatrixXd& gradient, std::vector<int>* fallback)
{
    return evaluate(state, &gradient, fallback);
}

double bulk_density_jet(const MatN& a, const MatN& l, MatN* grad)
{
    const NodeTerm t = node_term(a, l, grad != nullptr);
    if (grad) *grad = t.grad_a;
    return t.dist2;
}

Eigen::VectorXd weighted_mean(const BulkState& state)
{
    const TubularGrid& grid = *state.grid;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(state.dim());
    double wsum = 0.0;
    for (int b = 0; b < grid.size(); ++b) {
        acc += grid.bulk_weights[b] * state.values.col(b);
        wsum += grid.bulk_weights[b];
    }
    return acc / wsum;
}

void apply_mean_zero_gauge(BulkState& state)
{
    const Eigen::VectorXd mean = weighted_mean(state);
    state.values.colwise() -= mean;
}

}  // namespace thinlimit
