#include "thinlimit/harness.hpp"
#include "thinlimit/recovery.hpp"
#include "thinlimit/rotations.hpp"
#include "thinlimit/scenarios.hpp"
#include "thinlimit/states.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace thinlimit {

GammaSweep gamma_sweep(const ScenarioSpec& s, const ReducedState& init, const std::vector<double>& h_list,
                       const GammaOptions& options)
{
    if (h_list.size() < 3) throw ConfigError("gamma_sweep: need at least three h values");
    for (std::size_t i = 1; i < h_list.size(); ++i)
        if (!(h_list[i] < h_list[i - 1])) throw ConfigError("gamma_sweep: h_list must be strictly decreasing");
    for (double h : h_list)
        if (!(h > 0.0)) throw ConfigError("gamma_sweep: h values must be positive");

    GammaSweep out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        out.reduced = minimize_reduced(s, init, options.optimize);
    } catch (const Error& e) {
        out.reduced_failed = true;
        out.reduced_failure = e.what();
    }
    const double elim = out.reduced_failed ? nan : out.reduced.report.terms.at("limit");
    for (double h : h_list) {
        GammaRow row;
        row.h = h;
        row.Elim_star = elim;
        const auto t0 = std::chrono::steady_clock::now();
        if (out.reduced_failed) {
            row.status = "failed";
            row.failure = "reduced minimization failed: " + out.reduced_failure;
            row.min_Eh = row.gap = row.recovery_Eh = nan;
        } else {
            try {
                auto grid = std::make_shared<const TubularGrid>(
                    build_tubular_grid(s, out.reduced.state.mesh, h, options.normal_resolution));
                const BulkState rec = build_recovery(out.reduced.state, grid);
                row.recovery_Eh = *eval_Eh(rec).value;
                const BulkResult bulk = minimize_bulk(rec, options.optimize);
                row.min_Eh = *bulk.report.value;
                row.gap = std::abs(row.min_Eh - row.Elim_star);
                row.status = bulk.status;
            } catch (const Error& e) {
                row.status = "failed";
                row.failure = e.what();
                row.min_Eh = row.gap = nan;
                if (!std::isfinite(row.recovery_Eh)) row.recovery_Eh = nan;
            }
        }
        row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.rows.push_back(row);
    }
    return out;
}

RigidityReport rigidity_probe(const BulkState& state)
{
    const TubularGrid& grid = *state.grid;
    const SurfaceMesh& mesh = *grid.base;
    const int N = mesh.size(), nn = grid.normal_count(), n = state.dim(), m = mesh.chart_dim;
    RigidityReport out;
    out.energy = *eval_Eh(state).value;
    out.q.assign(N, MatN::Identity(n, n));
    std::vector<MatN> pulled(grid.size());
    for (int b = 0; b < grid.size(); ++b)
        if (grid.active[b]) pulled[b] = bulk_derivative(state, b) * grid.frame_inv[b];
    for (int i = 0; i < N; ++i) {
        if (mesh.degenerate_mask[i]) continue;
        MatN avg = MatN::Zero(n, n);
        double wsum = 0.0;
        for (int j = 0; j < nn; ++j) {
            const int b = grid.bulk_index(i, j);
            avg += grid.normal_weights[j] * pulled[b];
            wsum += grid.normal_weights[j];
        }
        out.q[i] = nearest_rotation(avg / wsum);
    }
    const ChartBox& box = [&]() -> ChartBox {
        ChartBox bx{mesh.origin, mesh.origin};
        for (int a = 0; a < m; ++a) bx.hi(a) = mesh.origin(a) + mesh.spacing[a] * (mesh.counts[a] - 1);
        return bx;
    }();
    const double layer = std::sqrt(grid.h);
    double total = 0.0, lhs = 0.0, boundary = 0.0;
    for (int i = 0; i < N; ++i) {
        if (mesh.degenerate_mask[i]) continue;
        double d = std::numeric_limits<double>::infinity();
        for (int a = 0; a < m; ++a)
            d = std::min({d, mesh.nodes[i](a) - box.lo(a), box.hi(a) - mesh.nodes[i](a)});
        for (int j = 0; j < nn; ++j) {
            const int b = grid.bulk_index(i, j);
            const double w = grid.bulk_weights[b];
            const double r = w * (pulled[b] - out.q[i]).squaredNorm();
            lhs += r;
            if (d < layer) boundary += r;
            total += w;
        }
    }
    out.lhs = lhs / total;
    out.boundary_fraction = lhs > 0.0 ? boundary / lhs : 0.0;
    out.ratio = out.lhs / (grid.h * grid.h * (out.energy + 1.0));

    const int zero = grid.zero_section();
    double gsum = 0.0, wsum = 0.0;
    for (int i = 0; i < N; ++i) {
        if (mesh.degenerate_mask[i] || mesh.quad_weights[i] == 0.0) continue;
        std::vector<MatN> dq(m, MatN::Zero(n, n));
        for (int a = 0; a < m; ++a) {
            const Stencil& st = mesh.derivative[a][i];
            for (int t = 0; t < st.taps; ++t) dq[a] += st.coeff[t] * out.q[st.node[t]];
        }
        // J(x, 0) = blockdiag(E, I) with g = E^T E, so g^{-1} = E^{-1} E^{-T}.
        const MatN e_inv = grid.frame_inv[grid.bulk_index(i, zero)].topLeftCorner(m, m);
        const MatN g = e_inv * e_inv.transpose();
        double v = 0.0;
        for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c) v += g(a, c) * (dq[a].cwiseProduct(dq[c])).sum();
        gsum += mesh.quad_weights[i] * v;
        wsum += mesh.quad_weights[i];
    }
    out.grad_q = gsum / wsum;
    out.grad_ratio = out.grad_q / (out.energy + 1.0);
    return out;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points)
{
    if (points.size() < 3) throw DomainError("rate_fit: need at least three points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(points.size());
    std::vector<std::pair<double, double>> logs;
    for (auto [h, v] : points) {
        if (!(h > 0.0) || !(v > 0.0) || !std::isfinite(h) || !std::isfinite(v))
            throw DomainError("rate_fit: values must be positive and finite");
        logs.emplace_back(std::log(h), std::log(v));
    }
    for (auto [x, y] : logs) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    for (auto [x, y] : logs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0)) throw DomainError("rate_fit: h values must not all coincide");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (auto [x, y] : logs) {
        const double r = y - (fit.intercept + fit.slope * x);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

VolumeAsymptotics volume_asymptotics(const ScenarioSpec& s, int resolution, int normal_resolution,
                                     const std::vector<double>& h_list)
{
    auto mesh = build_surface_mesh(s, resolution);
    const double area = mesh->total_weight();
    const double nu = unit_ball_volume(s.codim);
    VolumeAsymptotics out;
    std::vector<std::pair<double, double>> pts;
    out.at_roundoff = true;
    for (double h : h_list) {
        const TubularGrid grid = build_tubular_grid(s, mesh, h, normal_resolution);
        const double expected = area * nu * std::pow(h, s.codim);
        const double r = std::abs(grid.total_weight() - expected);
        out.residual.push_back(r);
        if (r > 1e-12 * expected) out.at_roundoff = false;
        pts.emplace_back(h, r);
    }
    out.slope = out.at_roundoff ? std::numeric_limits<double>::quiet_NaN() : rate_fit(pts).slope;
    return out;
}

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, Rng& rng, double sigma = 1.0)
{
    std::normal_distribution<double> normal(0.0, sigma);
    Eigen::MatrixXd a(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) a(i, j) = normal(rng);
    return a;
}

MatN random_rotation(int n, Rng& rng)
{
    const Eigen::MatrixXd a = gaussian_matrix(n, n, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

CheckResult make_check(std::string name, double value, double threshold, std::string detail = {})
{
    return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

std::vector<ScenarioSpec> suite_scenarios()
{
    std::vector<ScenarioSpec> out;
    for (const auto& fam : scenario_families()) {
        ScenarioParams p;
        p.family = fam;
        if (fam == "rod") p.rod_curvature = {1.0, 0.5}, p.torsion = 0.7, p.length = 2.0;
        out.push_back(make_scenario(p));
    }
    return out;
}

int suite_resolution(const ScenarioSpec& s) { return s.chart_dim() == 1 ? 12 : 5; }

double relative_gradient_error(const Eigen::VectorXd& x, const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& f)
{
    Eigen::VectorXd g;
    f(x, &g);
    Eigen::VectorXd fd(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double eps = 1e-6 * std::max(1.0, std::abs(x(i)));
        xp(i) = x(i) + eps;
        const double fp = f(xp, nullptr);
        xp(i) = x(i) - eps;
        const double fm = f(xp, nullptr);
        xp(i) = x(i);
        fd(i) = (fp - fm) / (2.0 * eps);
    }
    return (g - fd).norm() / std::max(g.norm(), 1e-300);
}

ReducedState random_reduced_state(const ScenarioSpec& s, Rng& rng, double sigma)
{
    auto mesh = build_surface_mesh(s, suite_resolution(s));
    ReducedState st = s.bulk_mode == BulkMode::Embedded ? embedded_state(s, mesh) : chart_identity_state(s, mesh);
    perturb(st, sigma, rng);
    return st;
}

BulkState random_bulk_state(const ScenarioSpec& s, Rng& rng, double sigma, double h)
{
    auto mesh = build_surface_mesh(s, suite_resolution(s));
    auto grid = std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, h, 5));
    BulkState st = s.bulk_mode == BulkMode::Embedded ? embedded_bulk(s, grid) : chart_identity_bulk(grid);
    perturb(st, sigma, rng);
    return st;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed)
{
    std::vector<CheckResult> out;
    Rng rng(seed);
    const auto scenarios = suite_scenarios();

    // SPD metrics at every node of every scenario, on the surface and across the tube.
    {
        double min_eig = std::numeric_limits<double>::infinity();
        for (const auto& s : scenarios) {
            auto mesh = build_surface_mesh(s, 8);
            const TubularGrid grid = build_tubular_grid(s, mesh, 0.1, 5);
            for (int i = 0; i < mesh->size(); ++i) {
                if (mesh->degenerate_mask[i]) continue;
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(eval_metric(s, mesh->nodes[i]));
                min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
                for (int j = 0; j < grid.normal_count(); ++j) {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(eval_bulk_metric(s, mesh->nodes[i], grid.normal_nodes[j]));
                    min_eig = std::min(min_eig, eb.eigenvalues().minCoeff());
                }
            }
        }
        CheckResult c{"spd_metrics", min_eig > 1e-10, min_eig, 1e-10, "smallest eigenvalue (must exceed threshold)"};
        out.push_back(c);
    }

    // Right invariance and projection optimality of the SO(3) distance.
    {
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const MatN a = gaussian_matrix(3, 3, rng);
            const MatN r = random_rotation(3, rng);
            worst = std::max(worst, std::abs(dist_so(a * r) - dist_so(a)));
        }
        out.push_back(make_check("dist_right_invariance", worst, 1e-12));
    }
    {
        std::vector<MatN> rotations;
        for (int t = 0; t < 1000; ++t) rotations.push_back(random_rotation(3, rng));
        double worst = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < 1000; ++t) {
            const MatN a = gaussian_matrix(3, 3, rng);
            const double d = (a - nearest_rotation(a)).norm();
            for (const MatN& r : rotations) worst = std::max(worst, d - (a - r).norm());
        }
        out.push_back(make_check("projection_optimality", worst, 1e-12, "max |A - P(A)| - |A - R|"));
    }

    // Quadratic linearization: |dist(I + tA) - t |sym A|| / t^2 stays bounded as t decreases.
    {
        double worst = 0.0;
        const MatN id = MatN::Identity(3, 3);
        for (int trial = 0; trial < 100; ++trial) {
            MatN a = gaussian_matrix(3, 3, rng);
            a /= a.norm();
            std::vector<double> c;
            for (double t : {1e-1, 1e-2, 1e-3})
                c.push_back(std::abs(dist_so(id + t * a) - t * sym_linearized(a)) / (t * t));
            // Growth of the fitted constant between the coarsest and the finest t.
            const double growth = c.back() / std::max(c.front(), 1e-3);
            worst = std::max(worst, growth);
        }
        out.push_back(make_check("linearized_distance_quadratic", worst, 4.0, "max C(1e-3) / C(1e-1)"));
    }

    // Frame indifference of both energies.
    {
        double worst = 0.0;
        for (const auto& s : scenarios) {
            BulkState b = random_bulk_state(s, rng, 0.02, 0.1);
            const double e0 = *eval_Eh(b).value;
            const MatN r = random_rotation(3, rng);
            const Eigen::Vector3d c = gaussian_matrix(3, 1, rng);
            b.values = (r * b.values).colwise() + c;
            worst = std::max(worst, std::abs(*eval_Eh(b).value - e0) / std::max(1.0, e0));
        }
        out.push_back(make_check("frame_indifference_Eh", worst, 1e-10));
    }
    {
        double worst = 0.0;
        for (const auto& s : scenarios) {
            ReducedState st = random_reduced_state(s, rng, 0.02);
            const EnergyReport e0 = eval_Elim(st, s, LimitMode::penalized(1e3));
            const MatN r = random_rotation(3, rng);
            const Eigen::Vector3d c = gaussian_matrix(3, 1, rng);
            st.F = (r * st.F).colwise() + c;
            st.qperp = r * st.qperp;
            const EnergyReport e1 = eval_Elim(st, s, LimitMode::penalized(1e3));
            worst = std::max(worst, std::abs(*e1.value - *e0.value) / std::max(1.0, *e0.value));
        }
        out.push_back(make_check("frame_indifference_Elim", worst, 1e-10));
    }

    // Second moment of the uniform unit k-ball by Monte Carlo, 1e7 samples.
    for (int k : {1, 2}) {
        const int samples = 10'000'000;
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < samples;) {
            double r2 = 0.0, x0 = 0.0;
            for (int u = 0; u < k; ++u) {
                const double x = unif(rng);
                if (u == 0) x0 = x;
                r2 += x * x;
            }
            if (r2 > 1.0) continue;
            sum += x0 * x0;
            sum_sq += x0 * x0 * x0 * x0;
            ++i;
        }
        const double mean = sum / samples;
        const double sigma = std::sqrt((sum_sq / samples - mean * mean) / samples);
        out.push_back({"kappa_monte_carlo_k" + std::to_string(k), std::abs(mean - kappa(k)) <= 3.0 * sigma,
                       std::abs(mean - kappa(k)), 3.0 * sigma, "estimate " + std::to_string(mean)});
    }

    // Analytic gradients against central differences on 20 random states each.
    {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const ScenarioSpec& s = scenarios[t % scenarios.size()];
            const BulkState b0 = random_bulk_state(s, rng, 0.03, 0.1);
            BulkState work = b0;
            auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
                work.values.reshaped() = x;
                if (!g) return *eval_Eh(work).value;
                Eigen::MatrixXd gm;
                const double v = eval_grad_Eh(work, gm);
                *g = gm.reshaped();
                return v;
            };
            worst = std::max(worst, relative_gradient_error(b0.values.reshaped(), f));
        }
        out.push_back(make_check("gradient_Eh_fd", worst, 1e-5));
    }
    {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const ScenarioSpec& s = scenarios[t % scenarios.size()];
            const ReducedState st0 = random_reduced_state(s, rng, 0.03);
            const SurfaceFields fields = sample_surface_fields(s, *st0.mesh);
            ReducedState work = st0;
            const Eigen::Index nF = st0.F.size();
            auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
                work.F.reshaped() = x.head(nF);
                work.qperp.reshaped() = x.tail(x.size() - nF);
                if (!g) return eval_grad_Elim(work, fields, 1e3, nullptr);
                ReducedGradient rg;
                const double v = eval_grad_Elim(work, fields, 1e3, &rg);
                g->resize(x.size());
                g->head(nF) = rg.F.reshaped();
                g->tail(x.size() - nF) = rg.qperp.reshaped();
                return v;
            };
            Eigen::VectorXd x(st0.F.size() + st0.qperp.size());
            x.head(nF) = st0.F.reshaped();
            x.tail(x.size() - nF) = st0.qperp.reshaped();
            worst = std::max(worst, relative_gradient_error(x, f));
        }
        out.push_back(make_check("gradient_Elim_fd", worst, 1e-5));
    }
    return out;
}

}  // namespace thinlimit
