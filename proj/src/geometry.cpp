#include "thinlimit/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace thinlimit {

namespace {

std::string format_point(const VecN& x)
{
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ')';
    return os.str();
}

double min_eigenvalue(const MatN& a)
{
    Eigen::SelfAdjointEigenSolver<MatN> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// Upper factor E with E^T E = g.
MatN upper_factor(const MatN& g)
{
    Eigen::LLT<MatN> llt(g);
    if (llt.info() != Eigen::Success) throw GeometryError("metric is not positive definite");
    return MatN(llt.matrixU());
}

// Generic first-derivative stencil along one axis. `neighbor(s)` returns the
// node `s` steps away or -1.
template <class Neighbor>
Stencil derivative_stencil(int self, double step, Neighbor&& neighbor)
{
    Stencil st;
    const int p1 = neighbor(1), m1 = neighbor(-1);
    if (p1 >= 0 && m1 >= 0) {
        st.node = {m1, p1, 0};
        st.coeff = {-0.5 / step, 0.5 / step, 0.0};
        st.taps = 2;
        return st;
    }
    st.one_sided = true;
    const int p2 = neighbor(2), m2 = neighbor(-2);
    if (p1 >= 0 && p2 >= 0) {
        st.node = {self, p1, p2};
        st.coeff = {-1.5 / step, 2.0 / step, -0.5 / step};
        st.taps = 3;
    } else if (m1 >= 0 && m2 >= 0) {
        st.node = {self, m1, m2};
        st.coeff = {1.5 / step, -2.0 / step, 0.5 / step};
        st.taps = 3;
    } else if (p1 >= 0) {
        st.node = {self, p1, 0};
        st.coeff = {-1.0 / step, 1.0 / step, 0.0};
        st.taps = 2;
    } else if (m1 >= 0) {
        st.node = {self, m1, 0};
        st.coeff = {1.0 / step, -1.0 / step, 0.0};
        st.taps = 2;
    } else {
        throw ConfigError("derivative stencil: node has no neighbors along an axis");
    }
    return st;
}

}  // namespace

std::string to_string(BulkMode mode)
{
    switch (mode) {
    case BulkMode::Embedded: return "embedded";
    case BulkMode::ProductPlate: return "product_plate";
    case BulkMode::SyntheticExpansion: return "synthetic_expansion";
    }
    return "unknown";
}

bool ChartBox::contains(const VecN& x, double slack) const
{
    if (x.size() != lo.size()) return false;
    for (int a = 0; a < x.size(); ++a) {
        const double tol = slack * std::max(1.0, extent(a));
        if (!(x(a) >= lo(a) - tol && x(a) <= hi(a) + tol)) return false;
    }
    return true;
}

MatN eval_metric(const ScenarioSpec& s, const VecN& x)
{
    if (!s.chart_domain.contains(x, 1e-9))
        throw DomainError("eval_metric: point " + format_point(x) + " outside chart domain");
    MatN g = s.metric_fn(x);
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()))
        throw GeometryError("eval_metric: metric not symmetric at " + format_point(x));
    if (!(min_eigenvalue(g) > 1e-10))
        throw GeometryError("eval_metric: metric not positive definite at " + format_point(x));
    return g;
}

std::vector<MatN> eval_ii(const ScenarioSpec& s, const VecN& x)
{
    if (!s.chart_domain.contains(x, 1e-9))
        throw DomainError("eval_ii: point " + format_point(x) + " outside chart domain");
    return s.ii_fn(x);
}

std::vector<MatN> eval_normal_connection(const ScenarioSpec& s, const VecN& x)
{
    if (!s.chart_domain.contains(x, 1e-9))
        throw DomainError("eval_normal_connection: point " + format_point(x) + " outside chart domain");
    return s.normal_connection_fn(x);
}

std::vector<MatN> shape_operators(const ScenarioSpec& s, const VecN& x)
{
    const MatN ginv = eval_metric(s, x).inverse();
    std::vector<MatN> out;
    for (const MatN& ii : eval_ii(s, x)) out.push_back(ginv * ii);
    return out;
}

Christoffel christoffel(const ScenarioSpec& s, const VecN& x)
{
    const int m = s.chart_dim();
    const MatN g = eval_metric(s, x);
    Christoffel out;
    std::vector<MatN> dg(m);  // dg[e] = d g / d x^e
    for (int e = 0; e < m; ++e) {
        const double step = 1e-5 * s.chart_domain.extent(e);
        VecN xp = x, xm = x;
        xp(e) += step;
        xm(e) -= step;
        const bool fwd_ok = s.chart_domain.contains(xp, 0.0);
        const bool bwd_ok = s.chart_domain.contains(xm, 0.0);
        if (fwd_ok && bwd_ok) {
            dg[e] = (s.metric_fn(xp) - s.metric_fn(xm)) / (2.0 * step);
        } else {
            out.one_sided = true;
            const double dir = fwd_ok ? 1.0 : -1.0;
            VecN x1 = x, x2 = x;
            x1(e) += dir * step;
            x2(e) += 2.0 * dir * step;
            dg[e] = dir * (-3.0 * g + 4.0 * s.metric_fn(x1) - s.metric_fn(x2)) / (2.0 * step);
        }
    }
    const MatN ginv = g.inverse();
    out.gamma.assign(m, MatN::Zero(m, m));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) {
                double acc = 0.0;
                for (int d = 0; d < m; ++d)
                    acc += ginv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
                out.gamma[a](b, c) = 0.5 * acc;
            }
    return out;
}

MatN bulk_frame(const ScenarioSpec& s, const VecN& x, const VecN& xi)
{
    const int n = s.dim_ambient, m = s.chart_dim(), k = s.codim;
    const MatN e = upper_factor(s.metric_fn(x));
    MatN j = MatN::Zero(n, n);
    switch (s.bulk_mode) {
    case BulkMode::ProductPlate:
        j.topLeftCorner(m, m) = e;
        j.bottomRightCorner(k, k).setIdentity();
        break;
    case BulkMode::SyntheticExpansion: {
        const std::vector<MatN> ii = s.ii_fn(x);
        const std::vector<MatN> omega = s.normal_connection_fn(x);
        const MatN c_inv = e.transpose().inverse();  // E^{-T}
        MatN top = e;
        for (int u = 0; u < k; ++u) top += xi(u) * c_inv * ii[u];
        j.topLeftCorner(m, m) = top;
        for (int a = 0; a < m; ++a) j.block(m, a, k, 1) = omega[a] * xi;
        j.bottomRightCorner(k, k).setIdentity();
        break;
    }
    case BulkMode::Embedded: {
        const MatN d0 = s.embedding_jacobian(x, VecN::Zero(k));
        MatN o(n, n);
        o.leftCols(m) = d0.leftCols(m) * e.inverse();
        o.rightCols(k) = d0.rightCols(k);
        j = o.transpose() * s.embedding_jacobian(x, xi);
        break;
    }
    }
    return j;
}

MatN eval_bulk_metric(const ScenarioSpec& s, const VecN& x, const VecN& xi)
{
    if (!s.chart_domain.contains(x, 1e-9))
        throw DomainError("eval_bulk_metric: point " + format_point(x) + " outside chart domain");
    const MatN j = bulk_frame(s, x, xi);
    MatN g = j.transpose() * j;
    if (!(j.determinant() > 0.0) || !(min_eigenvalue(g) > 1e-10))
        throw GeometryError("eval_bulk_metric: bulk metric degenerate at x = " + format_point(x) +
                            ", xi = " + format_point(xi) + " (tube too thick for the curvature?)");
    return g;
}

double SurfaceMesh::total_weight() const
{
    double acc = 0.0;
    for (double w : quad_weights) acc += w;
    return acc;
}

int SurfaceMesh::index(const std::vector<int>& multi) const
{
    int idx = 0;
    for (int a = chart_dim - 1; a >= 0; --a) idx = idx * counts[a] + multi[a];
    return idx;
}

std::vector<int> SurfaceMesh::multi_index(int node) const
{
    std::vector<int> out(chart_dim);
    for (int a = 0; a < chart_dim; ++a) {
        out[a] = node % counts[a];
        node /= counts[a];
    }
    return out;
}

bool SurfaceMesh::same_layout(const SurfaceMesh& other) const
{
    if (chart_dim != other.chart_dim || counts != other.counts) return false;
    for (int a = 0; a < chart_dim; ++a)
        if (std::abs(spacing[a] - other.spacing[a]) > 1e-14 * std::abs(spacing[a]) ||
            std::abs(origin(a) - other.origin(a)) > 1e-14 * std::max(1.0, std::abs(origin(a))))
            return false;
    return true;
}

int SurfaceMesh::center_node() const
{
    std::vector<int> mid(chart_dim);
    for (int a = 0; a < chart_dim; ++a) mid[a] = counts[a] / 2;
    return index(mid);
}

std::shared_ptr<const SurfaceMesh> build_surface_mesh(const ScenarioSpec& s, int resolution)
{
    return build_surface_mesh(s, std::vector<int>(s.chart_dim(), resolution));
}

std::shared_ptr<const SurfaceMesh> build_surface_mesh(const ScenarioSpec& s, const std::vector<int>& resolution)
{
    const int m = s.chart_dim();
    if (static_cast<int>(resolution.size()) != m)
        throw ConfigError("build_surface_mesh: resolution must list one entry per chart axis");
    if (s.chart_domain.dim() != m) throw ConfigError("build_surface_mesh: chart domain dimension mismatch");
    auto mesh = std::make_shared<SurfaceMesh>();
    mesh->chart_dim = m;
    mesh->origin = s.chart_domain.lo;
    int total = 1;
    for (int a = 0; a < m; ++a) {
        if (resolution[a] < 4)
            throw ConfigError("build_surface_mesh: resolution " + std::to_string(resolution[a]) +
                              " below the minimum of 4 intervals per axis");
        if (!(s.chart_domain.extent(a) > 0.0)) throw ConfigError("build_surface_mesh: empty chart domain");
        mesh->counts.push_back(resolution[a] + 1);
        mesh->spacing.push_back(s.chart_domain.extent(a) / resolution[a]);
        total *= resolution[a] + 1;
    }
    mesh->nodes.resize(total);
    mesh->flat_weights.resize(total);
    mesh->quad_weights.resize(total);
    mesh->boundary_mask.assign(total, 0);
    mesh->degenerate_mask.assign(total, 0);
    for (int i = 0; i < total; ++i) {
        const std::vector<int> mi = mesh->multi_index(i);
        VecN x(m);
        double w = 1.0;
        bool boundary = false;
        for (int a = 0; a < m; ++a) {
            // Pin the last node to hi exactly.
            x(a) = mi[a] == mesh->counts[a] - 1 ? s.chart_domain.hi(a)
                                                 : s.chart_domain.lo(a) + mi[a] * mesh->spacing[a];
            const bool end = mi[a] == 0 || mi[a] == mesh->counts[a] - 1;
            boundary = boundary || end;
            w *= mesh->spacing[a] * (end ? 0.5 : 1.0);
        }
        mesh->nodes[i] = x;
        mesh->flat_weights[i] = w;
        mesh->boundary_mask[i] = boundary;
        const MatN g = s.metric_fn(x);
        if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()))
            throw GeometryError("build_surface_mesh: metric not symmetric at node " + std::to_string(i));
        if (!(min_eigenvalue(g) > 1e-10)) {
            if (s.allow_degenerate_boundary && boundary && g.determinant() > -1e-12) {
                mesh->degenerate_mask[i] = 1;
                mesh->quad_weights[i] = 0.0;
                continue;
            }
            throw GeometryError("build_surface_mesh: metric not positive definite at node " + std::to_string(i) +
                                " x = " + format_point(x));
        }
        mesh->quad_weights[i] = w * std::sqrt(g.determinant());
    }
    mesh->derivative.resize(m);
    for (int a = 0; a < m; ++a) {
        mesh->derivative[a].resize(total);
        for (int i = 0; i < total; ++i) {
            const std::vector<int> mi = mesh->multi_index(i);
            auto neighbor = [&](int steps) {
                std::vector<int> mj = mi;
                mj[a] += steps;
                if (mj[a] < 0 || mj[a] >= mesh->counts[a]) return -1;
                return mesh->index(mj);
            };
            mesh->derivative[a][i] = derivative_stencil(i, mesh->spacing[a], neighbor);
        }
    }
    return mesh;
}

double unit_ball_volume(int k)
{
    return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

int TubularGrid::zero_section() const
{
    for (int j = 0; j < normal_count(); ++j)
        if (normal_nodes[j].squaredNorm() == 0.0) return j;
    throw GeometryError("tubular grid has no node on the zero section");
}

double TubularGrid::total_weight() const
{
    double acc = 0.0;
    for (double w : bulk_weights) acc += w;
    return acc;
}

TubularGrid build_tubular_grid(const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh, double h,
                               int normal_resolution)
{
    if (!mesh) throw ConfigError("build_tubular_grid: null surface mesh");
    if (!(h > 0.0)) throw ConfigError("build_tubular_grid: thickness h must be positive");
    if (normal_resolution < 3 || normal_resolution % 2 == 0)
        throw ConfigError("build_tubular_grid: normal resolution must be odd and >= 3");
    const int k = s.codim;
    TubularGrid grid;
    grid.base = mesh;
    grid.h = h;
    grid.codim = k;
    grid.normal_resolution = normal_resolution;
    const int r = (normal_resolution - 1) / 2;

    std::vector<std::vector<int>> lattice;  // integer coordinates of kept nodes
    if (k == 1) {
        grid.normal_spacing = h / r;
        for (int j = -r; j <= r; ++j) {
            lattice.push_back({j});
            VecN xi(1);
            xi(0) = j * grid.normal_spacing;
            grid.normal_nodes.push_back(xi);
            // Composite Simpson on [-h, h].
            const int pos = j + r;
            const double c = (pos == 0 || pos == 2 * r) ? 1.0 : (pos % 2 == 1 ? 4.0 : 2.0);
            grid.normal_weights.push_back(c * grid.normal_spacing / 3.0);
        }
    } else {
        // The rim node on each axis keeps its transverse neighbors inside the ball.
        grid.normal_spacing = h / std::sqrt(static_cast<double>(r * r + 1));
        std::vector<int> mi(k, -r);
        while (true) {
            VecN xi(k);
            for (int u = 0; u < k; ++u) xi(u) = mi[u] * grid.normal_spacing;
            if (xi.norm() <= h * (1.0 + 1e-12)) {
                lattice.push_back(mi);
                grid.normal_nodes.push_back(xi);
            }
            int u = 0;
            while (u < k && ++mi[u] > r) mi[u++] = -r;
            if (u == k) break;
        }
        // w_j = dx^k (alpha + beta rho_j), rho = |xi|^2 / h^2, matching the
        // ball volume and its second moment.
        const double flat = std::pow(grid.normal_spacing, k);
        double s0 = 0, s1 = 0, s2 = 0;
        for (const VecN& xi : grid.normal_nodes) {
            const double rho = xi.squaredNorm() / (h * h);
            s0 += flat;
            s1 += flat * rho;
            s2 += flat * rho * rho;
        }
        const double vol = unit_ball_volume(k) * std::pow(h, k);
        const double second = vol * k / (k + 2.0);  // / h^2 already
        const double det = s0 * s2 - s1 * s1;
        const double alpha = (vol * s2 - s1 * second) / det;
        const double beta = (s0 * second - s1 * vol) / det;
        for (const VecN& xi : grid.normal_nodes) {
            const double w = flat * (alpha + beta * xi.squaredNorm() / (h * h));
            if (!(w > 0.0)) throw ConfigError("build_tubular_grid: moment-corrected fiber weight not positive");
            grid.normal_weights.push_back(w);
        }
    }

    std::map<std::vector<int>, int> lookup;
    for (int j = 0; j < static_cast<int>(lattice.size()); ++j) lookup[lattice[j]] = j;
    grid.normal_derivative.resize(k);
    for (int u = 0; u < k; ++u)
        for (int j = 0; j < static_cast<int>(lattice.size()); ++j) {
            auto neighbor = [&](int steps) {
                std::vector<int> mj = lattice[j];
                mj[u] += steps;
                auto it = lookup.find(mj);
                return it == lookup.end() ? -1 : it->second;
            };
            grid.normal_derivative[u].push_back(derivative_stencil(j, grid.normal_spacing, neighbor));
        }

    const int nn = grid.normal_count();
    const int total = mesh->size() * nn;
    const int n = s.dim_ambient;
    grid.bulk_weights.assign(total, 0.0);
    grid.frame.assign(total, MatN::Identity(n, n));
    grid.frame_inv.assign(total, MatN::Identity(n, n));
    grid.active.assign(total, 0);
    for (int i = 0; i < mesh->size(); ++i) {
        if (mesh->degenerate_mask[i]) continue;
        for (int j = 0; j < nn; ++j) {
            const int b = grid.bulk_index(i, j);
            const MatN jac = bulk_frame(s, mesh->nodes[i], grid.normal_nodes[j]);
            const double det = jac.determinant();
            const MatN g = jac.transpose() * jac;
            if (!(det > 0.0) || !(min_eigenvalue(g) > 1e-10))
                throw GeometryError("build_tubular_grid: bulk metric degenerate at surface node " +
                                    std::to_string(i) + ", normal node " + std::to_string(j) +
                                    " (h too large for the curvature)");
            grid.frame[b] = jac;
            grid.frame_inv[b] = jac.inverse();
            grid.bulk_weights[b] = mesh->flat_weights[i] * grid.normal_weights[j] * det;
            grid.active[b] = 1;
        }
    }
    return grid;
}

double embedding_metric_defect(const ScenarioSpec& s, const SurfaceMesh& mesh)
{
    if (s.bulk_mode != BulkMode::Embedded) return 0.0;
    const int m = s.chart_dim();
    double worst = 0.0;
    for (int i = 0; i < mesh.size(); ++i) {
        if (mesh.degenerate_mask[i]) continue;
        const MatN d0 = s.embedding_jacobian(mesh.nodes[i], VecN::Zero(s.codim));
        const MatN pull = d0.leftCols(m).transpose() * d0.leftCols(m);
        worst = std::max(worst, (pull - s.metric_fn(mesh.nodes[i])).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace thinlimit
