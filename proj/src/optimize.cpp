#include "thinlimit/optimize.hpp"
#include "thinlimit/parallel.hpp"
#include "thinlimit/rotations.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <deque>

namespace thinlimit {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

LbfgsResult lbfgs_minimize(const LbfgsProblem& problem, Eigen::VectorXd& x, const OptimizeOptions& options,
                           int iter_offset)
{
    LbfgsResult out;
    if (problem.gauge) problem.gauge(x);
    Eigen::VectorXd g(x.size()), g_new(x.size()), x_new(x.size());
    double f = problem.value_grad(x, g);
    if (!finite(f) || !g.allFinite())
        throw OptimizerFailure("non-finite objective at the initial point", out.trace);

    auto record = [&](int iter) {
        TraceRecord r{iter_offset + iter, f, g.norm(), problem.violation ? problem.violation(x) : 0.0};
        out.trace.push_back(r);
        if (options.on_iteration) options.on_iteration(r);
    };
    record(0);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    auto reset_memory = [&] {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
    };

    // Backtracking along d; on success x, g, f hold the accepted iterate.
    // Returns the smallest finite trial value through `best_trial`.
    auto line_search = [&](const Eigen::VectorXd& d, double initial_step, double& best_trial) {
        const double slope = g.dot(d);
        best_trial = INFINITY;
        if (!(slope < 0.0)) return false;
        double step = initial_step;
        for (int bt = 0; bt <= options.max_backtracks; ++bt, step *= 0.5) {
            x_new = x + step * d;
            double f_new = problem.value_grad(x_new, g_new);
            if (!finite(f_new) || !g_new.allFinite()) continue;
            best_trial = std::min(best_trial, f_new);
            if (f_new > f + options.armijo * step * slope) continue;
            if (problem.gauge) problem.gauge(x_new);
            Eigen::VectorXd sv = x_new - x;
            Eigen::VectorXd yv = g_new - g;
            const double sy = sv.dot(yv);
            if (sy > 1e-16 * sv.norm() * yv.norm()) {
                s_hist.push_back(std::move(sv));
                y_hist.push_back(std::move(yv));
                rho_hist.push_back(1.0 / sy);
                if (static_cast<int>(s_hist.size()) > options.memory) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }
            x.swap(x_new);
            g.swap(g_new);
            f = f_new;
            return true;
        }
        return false;
    };

    std::function<void(Eigen::VectorXd&)> precond;
    out.status = "max_iter";
    int iter = 0;
    while (true) {
        if (g.norm() <= options.grad_tol) {
            out.status = "converged";
            break;
        }
        if (iter >= options.max_iter) break;

        bool accepted = false;
        double best_trial = INFINITY;
        if (problem.preconditioner && options.precond_refresh > 0 && iter % options.precond_refresh == 0)
            precond = problem.preconditioner(x);
        if (!s_hist.empty() || precond) {
            // Two-loop recursion.
            Eigen::VectorXd d = -g;
            const int mem = static_cast<int>(s_hist.size());
            std::vector<double> alpha(mem);
            for (int i = mem - 1; i >= 0; --i) {
                alpha[i] = rho_hist[i] * s_hist[i].dot(d);
                d -= alpha[i] * y_hist[i];
            }
            if (precond)
                precond(d);
            else
                d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            for (int i = 0; i < mem; ++i) d += (alpha[i] - rho_hist[i] * y_hist[i].dot(d)) * s_hist[i];
            accepted = line_search(d, 1.0, best_trial);
            if (!accepted) reset_memory();
        }
        if (!accepted && precond) {
            // Stale model: rebuild once before falling back to steepest descent.
            precond = problem.preconditioner(x);
            Eigen::VectorXd d = -g;
            precond(d);
            accepted = line_search(d, 1.0, best_trial);
        }
        if (!accepted) {
            const Eigen::VectorXd d = -g;
            accepted = line_search(d, std::min(1.0, 1.0 / g.norm()), best_trial);
            if (!accepted) {
                const bool plateau = !finite(best_trial) ? false
                                                         : best_trial >= f - 1e-12 * std::max(1.0, std::abs(f));
                if (!plateau) throw OptimizerFailure("line search failed along steepest descent", out.trace);
                out.status = "stalled";
                break;
            }
        }
        ++iter;
        record(iter);
    }
    out.value = f;
    out.grad_norm = g.norm();
    out.iterations = iter;
    return out;
}

}  // namespace thinlimit

namespace thinlimit {

namespace {

Eigen::VectorXd pack(const ReducedState& st)
{
    Eigen::VectorXd x(st.F.size() + st.qperp.size());
    x.head(st.F.size()) = st.F.reshaped();
    x.tail(st.qperp.size()) = st.qperp.reshaped();
    return x;
}

void unpack(const Eigen::VectorXd& x, ReducedState& st)
{
    st.F.reshaped() = x.head(st.F.size());
    st.qperp.reshaped() = x.tail(st.qperp.size());
}

MatN frame_factor(const SurfaceFields& f, int i)
{
    MatN l = MatN::Identity(f.n, f.n);
    l.topLeftCorner(f.m, f.m) = f.orthonormalizer[i];
    return l;
}

MatN assembled_q(const ReducedState& st, int i)
{
    MatN q(st.dim(), st.dim());
    const int m = st.mesh->chart_dim;
    q.leftCols(m) = surface_derivative(st, i);
    q.rightCols(st.codim()) = st.normal_block(i);
    return q;
}

void mean_zero_F(Eigen::MatrixXd& F, const std::vector<double>& weights)
{
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(F.rows());
    double wsum = 0.0;
    for (Eigen::Index i = 0; i < F.cols(); ++i) {
        mean += weights[i] * F.col(i);
        wsum += weights[i];
    }
    F.colwise() -= mean / wsum;
}

void check_finite(const ReducedState& st)
{
    if (!st.F.allFinite() || !st.qperp.allFinite()) throw EvaluationError("minimize_reduced: initial state not finite");
}

}  // namespace

Eigen::MatrixXd integrate_tangent_field(const SurfaceMesh& mesh, const Eigen::MatrixXd& tangent,
                                        const Eigen::MatrixXd& previous)
{
    const int N = mesh.size(), m = mesh.chart_dim, n = static_cast<int>(previous.rows());
    if (tangent.cols() != static_cast<Eigen::Index>(m) * N || previous.cols() != N)
        throw ConfigError("integrate_tangent_field: size mismatch");
    using Sparse = Eigen::SparseMatrix<double>;
    Sparse normal(N, N);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N, n);
    double w_mean = 0.0;
    for (double w : mesh.flat_weights) w_mean += w;
    w_mean /= N;
    // Tikhonov weight far below the stiffness ~ 1 / spacing^2 of the
    // difference operator; only pins constants and near-null modes.
    const double eps = 1e-8;
    std::vector<Eigen::Triplet<double>> trip;
    for (int a = 0; a < m; ++a) {
        Sparse d(N, N);
        std::vector<Eigen::Triplet<double>> dt;
        for (int i = 0; i < N; ++i) {
            const Stencil& st = mesh.derivative[a][i];
            for (int t = 0; t < st.taps; ++t) dt.emplace_back(i, st.node[t], st.coeff[t]);
        }
        d.setFromTriplets(dt.begin(), dt.end());
        Eigen::VectorXd w(N);
        for (int i = 0; i < N; ++i) w(i) = mesh.flat_weights[i] / w_mean;
        const Sparse dw = d.transpose() * w.asDiagonal();
        normal += dw * d;
        Eigen::MatrixXd ta(N, n);
        for (int i = 0; i < N; ++i) ta.row(i) = tangent.col(static_cast<Eigen::Index>(i) * m + a).transpose();
        rhs += dw * ta;
    }
    Sparse reg(N, N);
    for (int i = 0; i < N; ++i) trip.emplace_back(i, i, eps * mesh.flat_weights[i] / w_mean);
    reg.setFromTriplets(trip.begin(), trip.end());
    normal += reg;
    rhs += reg * previous.transpose();
    Eigen::SimplicialLDLT<Sparse> solver(normal);
    if (solver.info() != Eigen::Success) throw OptimizerError("integrate_tangent_field: factorization failed");
    Eigen::MatrixXd sol = solver.solve(rhs);
    return sol.transpose();
}

Eigen::SparseMatrix<double> assemble_hessian(const std::vector<LocalHessian>& terms, int dim)
{
    std::size_t count = 0;
    for (const auto& t : terms) count += t.vars.size() * t.vars.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(count);
    for (const auto& t : terms)
        for (std::size_t c = 0; c < t.vars.size(); ++c)
            for (std::size_t r = 0; r < t.vars.size(); ++r)
                if (t.hess(r, c) != 0.0) trip.emplace_back(t.vars[r], t.vars[c], t.hess(r, c));
    Eigen::SparseMatrix<double> h(dim, dim);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

namespace {

// Central-difference Jacobian of a local gradient, symmetrized, with
// negative eigenvalues clipped to zero.
template <class Grad>
Eigen::MatrixXd local_psd_hessian(const Eigen::VectorXd& jet, Grad&& grad)
{
    const Eigen::Index d = jet.size();
    Eigen::MatrixXd h(d, d);
    const double eps = 1e-6 * std::max(1.0, jet.cwiseAbs().maxCoeff());
    Eigen::VectorXd jp = jet, jm = jet;
    for (Eigen::Index c = 0; c < d; ++c) {
        jp(c) += eps;
        jm(c) -= eps;
        h.col(c) = (grad(jp) - grad(jm)) / (2.0 * eps);
        jp(c) = jet(c);
        jm(c) = jet(c);
    }
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
}

// Local variable list with lookup of (global index) -> local slot.
struct LocalVars {
    std::vector<int> vars;
    int slot(int global)
    {
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (vars[i] == global) return static_cast<int>(i);
        vars.push_back(global);
        return static_cast<int>(vars.size()) - 1;
    }
};

}  // namespace

Eigen::SparseMatrix<double> reduced_hessian_model(const ReducedState& state, const SurfaceFields& f, double beta)
{
    const SurfaceMesh& mesh = *state.mesh;
    const int N = mesh.size(), n = f.n, m = f.m, k = f.k;
    const int nF = n * N;
    const int jet_dim = n * n + n * m * k;
    auto f_index = [&](int node, int r) { return node * n + r; };
    auto q_index = [&](int node, int r, int u) { return nF + (k * node + u) * n + r; };
    std::vector<LocalHessian> terms(N);
    parallel_for(N, [&](std::size_t begin, std::size_t end) {
        for (std::size_t ii = begin; ii < end; ++ii) {
            const int i = static_cast<int>(ii);
            if (mesh.degenerate_mask[i] || f.weights[i] == 0.0) continue;
            // Linear map from local variables to the jet (q, nabla), column-major blocks.
            LocalVars lv;
            std::vector<std::vector<std::pair<int, double>>> rows(jet_dim);
            for (int a = 0; a < m; ++a) {
                const Stencil& st = mesh.derivative[a][i];
                for (int r = 0; r < n; ++r)
                    for (int t = 0; t < st.taps; ++t)
                        rows[a * n + r].emplace_back(lv.slot(f_index(st.node[t], r)), st.coeff[t]);
            }
            for (int u = 0; u < k; ++u)
                for (int r = 0; r < n; ++r) rows[(m + u) * n + r].emplace_back(lv.slot(q_index(i, r, u)), 1.0);
            for (int a = 0; a < m; ++a) {
                const Stencil& st = mesh.derivative[a][i];
                for (int u = 0; u < k; ++u)
                    for (int r = 0; r < n; ++r) {
                        auto& row = rows[n * n + (a * k + u) * n + r];
                        for (int t = 0; t < st.taps; ++t) row.emplace_back(lv.slot(q_index(st.node[t], r, u)), st.coeff[t]);
                        for (int v = 0; v < k; ++v)
                            if (f.omega[i][a](v, u) != 0.0) row.emplace_back(lv.slot(q_index(i, r, v)), -f.omega[i][a](v, u));
                    }
            }
            const int nl = static_cast<int>(lv.vars.size());
            Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(jet_dim, nl);
            for (int e = 0; e < jet_dim; ++e)
                for (auto [slot, c] : rows[e]) pm(e, slot) += c;
            Eigen::VectorXd local(nl);
            for (int l = 0; l < nl; ++l) {
                const int g = lv.vars[l];
                local(l) = g < nF ? state.F(g % n, g / n) : state.qperp((g - nF) % n, (g - nF) / n);
            }
            const Eigen::VectorXd jet = pm * local;
            auto grad = [&](const Eigen::VectorXd& j) {
                const MatN q = j.head(n * n).reshaped(n, n);
                const Eigen::MatrixXd nabla = j.tail(n * m * k).reshaped(n, m * k);
                MatN dq;
                Eigen::MatrixXd dn;
                limit_density_jet(f, i, beta, q, nabla, &dq, &dn);
                Eigen::VectorXd out(jet_dim);
                out.head(n * n) = dq.reshaped();
                out.tail(n * m * k) = dn.reshaped();
                return out;
            };
            terms[i].vars = lv.vars;
            terms[i].hess = f.weights[i] * pm.transpose() * local_psd_hessian(jet, grad) * pm;
        }
    });
    return assemble_hessian(terms, nF + n * k * N);
}

Eigen::SparseMatrix<double> bulk_hessian_model(const BulkState& state)
{
    const TubularGrid& grid = *state.grid;
    const SurfaceMesh& mesh = *grid.base;
    const int total = grid.size(), n = state.dim(), m = mesh.chart_dim, k = grid.codim, nn = grid.normal_count();
    const double scale = 1.0 / (grid.h * grid.h * grid.total_weight());
    std::vector<LocalHessian> terms(total);
    parallel_for(total, [&](std::size_t begin, std::size_t end) {
        for (std::size_t bb = begin; bb < end; ++bb) {
            const int b = static_cast<int>(bb);
            if (!grid.active[b] || grid.bulk_weights[b] == 0.0) continue;
            const int i = b / nn, j = b % nn;
            LocalVars lv;
            std::vector<std::vector<std::pair<int, double>>> rows(n * n);
            auto add_column = [&](int col, const Stencil& st, bool chart) {
                for (int t = 0; t < st.taps; ++t) {
                    const int node = chart ? grid.bulk_index(st.node[t], j) : grid.bulk_index(i, st.node[t]);
                    for (int r = 0; r < n; ++r) rows[col * n + r].emplace_back(lv.slot(node * n + r), st.coeff[t]);
                }
            };
            for (int a = 0; a < m; ++a) add_column(a, mesh.derivative[a][i], true);
            for (int u = 0; u < k; ++u) add_column(m + u, grid.normal_derivative[u][j], false);
            const int nl = static_cast<int>(lv.vars.size());
            Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(n * n, nl);
            for (int e = 0; e < n * n; ++e)
                for (auto [slot, c] : rows[e]) pm(e, slot) += c;
            Eigen::VectorXd local(nl);
            for (int l = 0; l < nl; ++l) local(l) = state.values(lv.vars[l] % n, lv.vars[l] / n);
            const Eigen::VectorXd jet = pm * local;
            const MatN& linv = grid.frame_inv[b];
            auto grad = [&](const Eigen::VectorXd& jv) {
                const MatN a = jv.reshaped(n, n);
                MatN g;
                bulk_density_jet(a, linv, &g);
                return Eigen::VectorXd(g.reshaped());
            };
            terms[b].vars = lv.vars;
            terms[b].hess = (grid.bulk_weights[b] * scale) * pm.transpose() * local_psd_hessian(jet, grad) * pm;
        }
    });
    return assemble_hessian(terms, n * total);
}

namespace {

// SPD solve with a diagonal shift grown until the Cholesky factorization succeeds.
std::function<void(Eigen::VectorXd&)> make_solver(Eigen::SparseMatrix<double> h)
{
    const Eigen::Index dim = h.rows();
    double mean_diag = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) mean_diag += h.coeff(i, i);
    mean_diag = std::max(mean_diag / std::max<Eigen::Index>(dim, 1), 1e-300);
    Eigen::SparseMatrix<double> shift(dim, dim);
    shift.setIdentity();
    auto solver = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
    solver->analyzePattern(h);
    for (double tau = 1e-8; tau < 1e8; tau *= 100.0) {
        solver->factorize(h + (tau * mean_diag) * shift);
        if (solver->info() == Eigen::Success)
            return [solver](Eigen::VectorXd& v) { v = solver->solve(v); };
    }
    throw OptimizerError("preconditioner factorization failed");
}

}  // namespace

void project_reduced(ReducedState& state, const SurfaceFields& fields)
{
    const SurfaceMesh& mesh = *state.mesh;
    const int N = mesh.size(), m = fields.m, k = fields.k, n = fields.n;
    Eigen::MatrixXd tangent(n, static_cast<Eigen::Index>(m) * N);
    Eigen::MatrixXd qperp = state.qperp;
    for (int i = 0; i < N; ++i) {
        const MatN l = frame_factor(fields, i);
        const MatN r = nearest_rotation(assembled_q(state, i) * l);
        const MatN q = r * l.inverse();
        tangent.middleCols(static_cast<Eigen::Index>(i) * m, m) = q.leftCols(m);
        qperp.middleCols(static_cast<Eigen::Index>(i) * k, k) = q.rightCols(k);
    }
    state.F = integrate_tangent_field(mesh, tangent, state.F);
    state.qperp = qperp;
}

void pin_reduced_gauge(ReducedState& state, const SurfaceFields& fields, int node, const MatN& reference)
{
    const MatN r = nearest_rotation(assembled_q(state, node) * frame_factor(fields, node));
    const MatN rot = reference * r.transpose();
    state.F = rot * state.F;
    state.qperp = rot * state.qperp;
    mean_zero_F(state.F, fields.weights);
}

ReducedResult minimize_reduced(const ScenarioSpec& s, const ReducedState& init, const OptimizeOptions& options)
{
    check_finite(init);
    if (!init.mesh) throw ConfigError("minimize_reduced: state has no mesh");
    if (init.dim() != s.dim_ambient || init.codim() != s.codim)
        throw ConfigError("minimize_reduced: state does not match the scenario dimensions");
    if (!(options.beta0 > 0.0) || !(options.beta_max >= options.beta0) || !(options.beta_growth > 1.0))
        throw ConfigError("minimize_reduced: invalid penalty schedule");
    const SurfaceFields fields = sample_surface_fields(s, *init.mesh);
    const int center = init.mesh->center_node();

    ReducedResult out;
    out.state = init;
    const MatN reference = nearest_rotation(assembled_q(init, center) * frame_factor(fields, center));
    pin_reduced_gauge(out.state, fields, center, reference);

    ReducedState work = out.state;
    auto violation = [&](const Eigen::VectorXd& x) {
        unpack(x, work);
        return assemble_q(work, fields).violation_max;
    };
    const Eigen::Index nF = out.state.F.size();
    auto gauge = [&](Eigen::VectorXd& x) {
        Eigen::MatrixXd F = x.head(nF).reshaped(out.state.F.rows(), out.state.F.cols());
        mean_zero_F(F, fields.weights);
        x.head(nF) = F.reshaped();
    };

    std::vector<TraceRecord> trace;
    int total = 0;
    auto run_stage = [&](double beta) {
        LbfgsProblem problem;
        problem.value_grad = [&, beta](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            unpack(x, work);
            ReducedGradient grad;
            const double v = eval_grad_Elim(work, fields, beta, &grad);
            g.resize(x.size());
            g.head(nF) = grad.F.reshaped();
            g.tail(x.size() - nF) = grad.qperp.reshaped();
            return v;
        };
        problem.gauge = gauge;
        problem.violation = violation;
        problem.preconditioner = [&, beta](const Eigen::VectorXd& x) {
            unpack(x, work);
            return make_solver(reduced_hessian_model(work, fields, beta));
        };
        Eigen::VectorXd x = pack(out.state);
        LbfgsResult r;
        try {
            r = lbfgs_minimize(problem, x, options, total);
        } catch (OptimizerFailure& e) {
            trace.insert(trace.end(), e.trace.begin(), e.trace.end());
            throw OptimizerFailure(e.what(), trace);
        }
        unpack(x, out.state);
        trace.insert(trace.end(), r.trace.begin(), r.trace.end());
        total += r.iterations;
        out.status = r.status;
    };

    for (double beta = options.beta0;; beta *= options.beta_growth) {
        beta = std::min(beta, options.beta_max);
        run_stage(beta);
        project_reduced(out.state, fields);
        pin_reduced_gauge(out.state, fields, center, reference);
        if (beta >= options.beta_max) break;
    }
    run_stage(options.beta_max);

    out.iterations = total;
    out.report = eval_Elim(out.state, fields, LimitMode::strict(options.violation_tol));
    out.report.trace = std::move(trace);
    ReducedGradient grad;
    eval_grad_Elim(out.state, fields, options.beta_max, &grad);
    out.report.grad_norm = std::sqrt(grad.F.squaredNorm() + grad.qperp.squaredNorm());
    return out;
}

BulkResult minimize_bulk(const BulkState& init, const OptimizeOptions& options)
{
    if (!init.grid) throw ConfigError("minimize_bulk: state has no grid");
    if (!init.values.allFinite()) throw EvaluationError("minimize_bulk: initial state not finite");
    BulkResult out;
    out.state = init;
    BulkState work = init;
    const Eigen::Index rows = init.values.rows(), cols = init.values.cols();
    LbfgsProblem problem;
    problem.value_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        work.values.reshaped() = x;
        Eigen::MatrixXd grad;
        const double v = eval_grad_Eh(work, grad);
        g = grad.reshaped();
        return v;
    };
    problem.gauge = [&](Eigen::VectorXd& x) {
        work.values = x.reshaped(rows, cols);
        apply_mean_zero_gauge(work);
        x = work.values.reshaped();
    };
    problem.preconditioner = [&](const Eigen::VectorXd& x) {
        work.values = x.reshaped(rows, cols);
        return make_solver(bulk_hessian_model(work));
    };
    Eigen::VectorXd x = init.values.reshaped();
    const LbfgsResult r = lbfgs_minimize(problem, x, options);
    out.state.values = x.reshaped(rows, cols);
    out.status = r.status;
    out.iterations = r.iterations;
    out.report = eval_Eh(out.state);
    out.report.trace = r.trace;
    out.report.grad_norm = r.grad_norm;
    return out;
}

}  // namespace thinlimit
