#include "thinlimit/reduced.hpp"

#include "thinlimit/parallel.hpp"
#include "thinlimit/rotations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace thinlimit {

namespace {

void check_state(const ReducedState& state, const SurfaceFields& f)
{
    if (!state.mesh) throw EvaluationError("reduced state has no mesh");
    const int nodes = state.mesh->size();
    if (state.F.rows() != f.n || state.F.cols() != nodes || state.qperp.rows() != f.n ||
        state.qperp.cols() != f.k * nodes)
        throw EvaluationError("reduced state shape does not match its mesh and scenario");
    if (static_cast<int>(f.weights.size()) != nodes)
        throw EvaluationError("surface fields were sampled on a different mesh");
    if (!state.F.allFinite() || !state.qperp.allFinite())
        throw EvaluationError("reduced state contains NaN or Inf");
}

MatN frame_factor(const SurfaceFields& f, int node)
{
    MatN l = MatN::Zero(f.n, f.n);
    l.topLeftCorner(f.m, f.m) = f.orthonormalizer[node];
    l.bottomRightCorner(f.k, f.k).setIdentity();
    return l;
}

Eigen::MatrixXd qperp_derivative(const ReducedState& state, const SurfaceMesh& mesh, int node, int k)
{
    const int n = state.dim(), m = mesh.chart_dim;
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(n, m * k);
    for (int a = 0; a < m; ++a) {
        const Stencil& st = mesh.derivative[a][node];
        for (int t = 0; t < st.taps; ++t) dq.middleCols(a * k, k) += st.coeff[t] * state.normal_block(st.node[t]);
    }
    return dq;
}

Eigen::MatrixXd covariant_at(const ReducedState& state, const SurfaceFields& f, int node)
{
    Eigen::MatrixXd nabla = qperp_derivative(state, *state.mesh, node, f.k);
    const auto q = state.normal_block(node);
    for (int a = 0; a < f.m; ++a)
        for (int u = 0; u < f.k; ++u)
            for (int v = 0; v < f.k; ++v) nabla.col(a * f.k + u) -= f.omega[node][a](v, u) * q.col(v);
    return nabla;
}

struct NodeEval {
    LimitDensity density;
    double dist2 = 0.0;
    bool singular = false;
    MatN d_q;                 // d(objective density)/dq
    Eigen::MatrixXd d_nabla;  // d/d nabla
};

NodeEval eval_jet(const SurfaceFields& f, int node, const MatN& q, const Eigen::MatrixXd& nabla, double kap,
                  double beta, bool grad)
{
    NodeEval out;
    const int n = f.n, m = f.m, k = f.k;
    const MatN l = frame_factor(f, node);
    const MatN q_hat = q * l;
    const SignedPolar polar = signed_polar(q_hat);
    out.dist2 = (polar.singular.array() - 1.0).square().sum();
    const double smin = std::abs(polar.singular(n - 1));
    MatN q_inv;
    if (smin < 1e-12 * std::max(1.0, std::abs(polar.singular(0)))) {
        out.singular = true;
        q_inv = q.completeOrthogonalDecomposition().pseudoInverse();
    } else {
        q_inv = q.inverse();
    }
    out.density = limit_density(q_inv, nabla, f.metric[node], f.metric_inv[node], f.shape[node]);
    if (!grad) return out;

    const MatN& g = f.metric[node];
    const MatN& gi = f.metric_inv[node];
    // B_{au} = q^{-1} nabla_{au}; W = kappa sum g^{aa'} t^T g t' + kappa/2 sum g^{aa'} c . c'
    Eigen::MatrixXd b = q_inv * nabla;
    Eigen::MatrixXd t = b.topRows(m);
    for (int a = 0; a < m; ++a)
        for (int u = 0; u < k; ++u) t.col(a * k + u) -= f.shape[node][u].col(a);
    const Eigen::MatrixXd c = b.bottomRows(k);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, m * k);
    for (int a = 0; a < m; ++a)
        for (int u = 0; u < k; ++u)
            for (int ap = 0; ap < m; ++ap) {
                y.col(a * k + u).head(m) += 2.0 * kap * gi(a, ap) * (g * t.col(ap * k + u));
                y.col(a * k + u).tail(k) += kap * gi(a, ap) * c.col(ap * k + u);
            }
    out.d_nabla = q_inv.transpose() * y;  // Z
    out.d_q = -out.d_nabla * b.transpose();
    if (beta > 0.0 && !out.singular) out.d_q += 2.0 * beta * (q_hat - polar.rotation) * l.transpose();
    return out;
}

NodeEval eval_node(const ReducedState& state, const SurfaceFields& f, int node, double kap, double beta, bool grad)
{
    MatN q(f.n, f.n);
    q.leftCols(f.m) = surface_derivative(state, node);
    q.rightCols(f.k) = state.normal_block(node);
    return eval_jet(f, node, q, covariant_at(state, f, node), kap, beta, grad);
}

}  // namespace

ReducedState make_reduced_state(std::shared_ptr<const SurfaceMesh> mesh, int n, int k)
{
    ReducedState s;
    s.F = Eigen::MatrixXd::Zero(n, mesh->size());
    s.qperp = Eigen::MatrixXd::Zero(n, k * mesh->size());
    s.mesh = std::move(mesh);
    return s;
}

SurfaceFields sample_surface_fields(const ScenarioSpec& s, const SurfaceMesh& mesh)
{
    SurfaceFields f;
    f.n = s.dim_ambient;
    f.m = s.chart_dim();
    f.k = s.codim;
    if (mesh.chart_dim != f.m) throw ConfigError("surface mesh dimension does not match the scenario");
    const int nodes = mesh.size();
    f.metric.resize(nodes);
    f.metric_inv.resize(nodes);
    f.orthonormalizer.resize(nodes);
    f.shape.resize(nodes);
    f.ii.resize(nodes);
    f.omega.resize(nodes);
    f.weights.resize(nodes);
    const double total = mesh.total_weight();
    for (int i = 0; i < nodes; ++i) {
        f.weights[i] = mesh.quad_weights[i] / total;
        if (mesh.degenerate_mask[i]) {
            f.metric[i] = f.metric_inv[i] = f.orthonormalizer[i] = MatN::Identity(f.m, f.m);
            f.ii[i] = f.shape[i] = std::vector<MatN>(f.k, MatN::Zero(f.m, f.m));
            f.omega[i] = std::vector<MatN>(f.m, MatN::Zero(f.k, f.k));
            continue;
        }
        const VecN& x = mesh.nodes[i];
        f.metric[i] = eval_metric(s, x);
        f.metric_inv[i] = f.metric[i].inverse();
        f.orthonormalizer[i] = FramePair(f.metric[i]).factor();
        f.ii[i] = eval_ii(s, x);
        for (const MatN& ii : f.ii[i]) f.shape[i].push_back(f.metric_inv[i] * ii);
        f.omega[i] = eval_normal_connection(s, x);
    }
    return f;
}

double kappa(int k)
{
    if (k < 1) throw ConfigError("kappa: codimension must be >= 1");
    return 1.0 / (k + 2.0);
}

MatN surface_derivative(const ReducedState& state, int node)
{
    const SurfaceMesh& mesh = *state.mesh;
    MatN d = MatN::Zero(state.dim(), mesh.chart_dim);
    for (int a = 0; a < mesh.chart_dim; ++a) {
        const Stencil& st = mesh.derivative[a][node];
        for (int t = 0; t < st.taps; ++t) d.col(a) += st.coeff[t] * state.F.col(st.node[t]);
    }
    return d;
}

QField assemble_q(const ReducedState& state, const ScenarioSpec& s)
{
    return assemble_q(state, sample_surface_fields(s, *state.mesh));
}

QField assemble_q(const ReducedState& state, const SurfaceFields& f)
{
    check_state(state, f);
    const SurfaceMesh& mesh = *state.mesh;
    const int nodes = mesh.size();
    QField out;
    out.q.resize(nodes);
    out.q_inv.resize(nodes);
    out.dist.assign(nodes, 0.0);
    for (int i = 0; i < nodes; ++i) {
        MatN q(f.n, f.n);
        q.leftCols(f.m) = surface_derivative(state, i);
        q.rightCols(f.k) = state.normal_block(i);
        out.q[i] = q;
        if (mesh.degenerate_mask[i]) {
            out.q_inv[i] = q.completeOrthogonalDecomposition().pseudoInverse();
            continue;
        }
        const SignedPolar polar = signed_polar(q * frame_factor(f, i));
        out.dist[i] = std::sqrt((polar.singular.array() - 1.0).square().sum());
        if (std::abs(polar.singular(f.n - 1)) < 1e-12 * std::max(1.0, std::abs(polar.singular(0)))) {
            out.singular_nodes.push_back(i);
            out.q_inv[i] = q.completeOrthogonalDecomposition().pseudoInverse();
        } else {
            out.q_inv[i] = q.inverse();
        }
        out.violation_max = std::max(out.violation_max, out.dist[i]);
        out.violation_mean_sq += f.weights[i] * out.dist[i] * out.dist[i];
    }
    return out;
}

CovariantDerivative covariant_derivative_qperp(const ReducedState& state, const ScenarioSpec& s)
{
    return covariant_derivative_qperp(state, sample_surface_fields(s, *state.mesh));
}

CovariantDerivative covariant_derivative_qperp(const ReducedState& state, const SurfaceFields& f)
{
    check_state(state, f);
    const SurfaceMesh& mesh = *state.mesh;
    CovariantDerivative out;
    out.values.resize(mesh.size());
    out.one_sided.assign(mesh.size(), 0);
    for (int i = 0; i < mesh.size(); ++i) {
        out.values[i] = covariant_at(state, f, i);
        for (int a = 0; a < f.m; ++a)
            if (mesh.derivative[a][i].one_sided) out.one_sided[i] = 1;
    }
    return out;
}

LimitDensity limit_density(const MatN& q_inv, const Eigen::MatrixXd& nabla, const MatN& g, const MatN& g_inv,
                           const std::vector<MatN>& shape)
{
    const int m = static_cast<int>(g.rows());
    const int k = static_cast<int>(shape.size());
    const Eigen::MatrixXd b = q_inv * nabla;
    LimitDensity d;
    for (int u = 0; u < k; ++u)
        for (int a = 0; a < m; ++a)
            for (int ap = 0; ap < m; ++ap) {
                const Eigen::VectorXd ta = b.col(a * k + u).head(m) - shape[u].col(a);
                const Eigen::VectorXd tb = b.col(ap * k + u).head(m) - shape[u].col(ap);
                d.tangential += g_inv(a, ap) * ta.dot(g * tb);
                d.normal += g_inv(a, ap) * b.col(a * k + u).tail(k).dot(b.col(ap * k + u).tail(k));
            }
    return d;
}

double limit_density_index_form(const MatN& q, const MatN& q_inv, const Eigen::MatrixXd& nabla, const MatN& g_inv,
                                const std::vector<MatN>& shape, double kap)
{
    const int n = static_cast<int>(q.rows());
    const int m = static_cast<int>(g_inv.rows());
    const int k = static_cast<int>(shape.size());
    // II^c_{au} = shape[u](c, a); nabla_a q_u^alpha = nabla(alpha, a k + u).
    auto ii = [&](int c, int a, int u) { return shape[u](c, a); };
    auto dq = [&](int alpha, int a, int u) { return nabla(alpha, a * k + u); };
    double first = 0.0;
    for (int alpha = 0; alpha < n; ++alpha)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int u = 0; u < k; ++u) {
                    double xa = dq(alpha, a, u), xb = dq(alpha, b, u);
                    for (int c = 0; c < m; ++c) {
                        xa -= q(alpha, c) * ii(c, a, u);
                        xb -= q(alpha, c) * ii(c, b, u);
                    }
                    first += g_inv(a, b) * xa * xb;
                }
    double second = 0.0;
    for (int u = 0; u < k; ++u)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double lhs = -ii(b, a, u), rhs = -ii(a, b, u);
                for (int alpha = 0; alpha < n; ++alpha) {
                    lhs += q_inv(b, alpha) * dq(alpha, a, u);
                    rhs += q_inv(a, alpha) * dq(alpha, b, u);
                }
                second += lhs * rhs;
            }
    return 0.5 * kap * (first + second);
}

EnergyReport eval_Elim(const ReducedState& state, const ScenarioSpec& s, LimitMode mode)
{
    return eval_Elim(state, sample_surface_fields(s, *state.mesh), mode);
}

EnergyReport eval_Elim(const ReducedState& state, const SurfaceFields& f, LimitMode mode)
{
    check_state(state, f);
    const SurfaceMesh& mesh = *state.mesh;
    const int nodes = mesh.size();
    const double kap = kappa(f.k);
    std::vector<NodeEval> evals(nodes);
    parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            if (!mesh.degenerate_mask[i]) evals[i] = eval_node(state, f, static_cast<int>(i), kap, 0.0, false);
    });
    EnergyReport r;
    double tangential = 0.0, normal = 0.0, penalty = 0.0, worst = 0.0;
    std::vector<int> offending;
    for (int i = 0; i < nodes; ++i) {
        if (mesh.degenerate_mask[i]) continue;
        const double w = f.weights[i];
        tangential += w * kap * evals[i].density.tangential;
        normal += w * 0.5 * kap * evals[i].density.normal;
        penalty += w * evals[i].dist2;
        const double d = std::sqrt(evals[i].dist2);
        worst = std::max(worst, d);
        if (evals[i].singular || (mode.kind == LimitMode::Kind::Strict && d > mode.tol)) offending.push_back(i);
    }
    r.terms["tangential"] = tangential;
    r.terms["normal"] = normal;
    r.terms["limit"] = tangential + normal;
    r.terms["penalty"] = penalty;
    r.constraint_violation = worst;
    r.flagged_nodes = offending;
    if (mode.kind == LimitMode::Kind::Strict) {
        if (!offending.empty()) {
            std::ostringstream os;
            os << "q = dF (+) q_perp leaves SO(n) at " << offending.size() << " node(s); max dist " << worst
               << " > tol " << mode.tol;
            r.diagnostics = os.str();
            return r;  // value stays empty: +infinity
        }
        r.value = tangential + normal;
    } else {
        if (!offending.empty()) r.diagnostics = "singular q at " + std::to_string(offending.size()) + " node(s)";
        r.value = tangential + normal + mode.beta * penalty;
    }
    return r;
}

double eval_grad_Elim(const ReducedState& state, const SurfaceFields& f, double beta, ReducedGradient* grad)
{
    check_state(state, f);
    const SurfaceMesh& mesh = *state.mesh;
    const int nodes = mesh.size(), m = f.m, k = f.k;
    const double kap = kappa(k);
    std::vector<NodeEval> evals(nodes);
    const bool want = grad != nullptr;
    parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            if (!mesh.degenerate_mask[i]) evals[i] = eval_node(state, f, static_cast<int>(i), kap, beta, want);
    });
    double value = 0.0;
    for (int i = 0; i < nodes; ++i)
        if (!mesh.degenerate_mask[i]) value += f.weights[i] * (evals[i].density.value(kap) + beta * evals[i].dist2);
    if (!want) return value;
    grad->F = Eigen::MatrixXd::Zero(state.F.rows(), state.F.cols());
    grad->qperp = Eigen::MatrixXd::Zero(state.qperp.rows(), state.qperp.cols());
    for (int i = 0; i < nodes; ++i) {
        if (mesh.degenerate_mask[i]) continue;
        const double w = f.weights[i];
        const MatN dq = evals[i].d_q * w;
        const Eigen::MatrixXd dn = evals[i].d_nabla * w;
        // q = [dF | q_perp]
        for (int a = 0; a < m; ++a) {
            const Stencil& st = mesh.derivative[a][i];
            for (int t = 0; t < st.taps; ++t) grad->F.col(st.node[t]) += st.coeff[t] * dq.col(a);
        }
        grad->qperp.middleCols(k * i, k) += dq.rightCols(k);
        // nabla_{au} = D_a q_u - sum_v omega_a(v, u) q_v
        for (int a = 0; a < m; ++a) {
            const Stencil& st = mesh.derivative[a][i];
            for (int t = 0; t < st.taps; ++t)
                grad->qperp.middleCols(k * st.node[t], k) += st.coeff[t] * dn.middleCols(a * k, k);
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) grad->qperp.col(k * i + v) -= f.omega[i][a](v, u) * dn.col(a * k + u);
        }
    }
    return value;
}

ReducedGradient grad_Elim(const ReducedState& state, const ScenarioSpec& s, LimitMode mode)
{
    ReducedGradient g;
    const double beta = mode.kind == LimitMode::Kind::Penalized ? mode.beta : 0.0;
    eval_grad_Elim(state, sample_surface_fields(s, *state.mesh), beta, &g);
    return g;
}

double limit_density_jet(const SurfaceFields& f, int node, double beta, const MatN& q, const Eigen::MatrixXd& nabla,
                         MatN* d_q, Eigen::MatrixXd* d_nabla)
{
    const double kap = kappa(f.k);
    const bool want = d_q != nullptr || d_nabla != nullptr;
    NodeEval e = eval_jet(f, node, q, nabla, kap, beta, want);
    if (d_q) *d_q = e.d_q;
    if (d_nabla) *d_nabla = e.d_nabla;
    return e.density.value(kap) + beta * e.dist2;
}

double discretization_tolerance(const SurfaceMesh& mesh)
{
    const double hmax = *std::max_element(mesh.spacing.begin(), mesh.spacing.end());
    return std::max(1e-6, hmax * hmax);
}

}  // namespace thinlimit
