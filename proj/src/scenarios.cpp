#include "thinlimit/scenarios.hpp"

#include <cmath>
#include <numbers>

namespace thinlimit {

namespace {

VecN vec(std::initializer_list<double> v)
{
    VecN out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

VecN vec(const std::vector<double>& v)
{
    VecN out(static_cast<int>(v.size()));
    for (int i = 0; i < out.size(); ++i) out(i) = v[i];
    return out;
}

auto zero_connection(int m, int k)
{
    return [m, k](const VecN&) { return std::vector<MatN>(m, MatN::Zero(k, k)); };
}

auto zero_ii(int m, int k)
{
    return [m, k](const VecN&) { return std::vector<MatN>(k, MatN::Zero(m, m)); };
}

}  // namespace

const std::vector<std::string>& scenario_families()
{
    static const std::vector<std::string> names{"euclid_plate", "hyperbolic_plate", "cylinder_shell",
                                                "sphere_cap_shell", "rod"};
    return names;
}

ScenarioSpec euclid_plate(const VecN& lo, const VecN& hi)
{
    ScenarioSpec s;
    s.family = "euclid_plate";
    s.codim = 1;
    s.chart_domain = {lo, hi};
    s.metric_fn = [](const VecN&) { return MatN(MatN::Identity(2, 2)); };
    s.ii_fn = zero_ii(2, 1);
    s.normal_connection_fn = zero_connection(2, 1);
    s.bulk_mode = BulkMode::Embedded;
    s.embedding = [](const VecN& x, const VecN& xi) { return vec({x(0), x(1), xi(0)}); };
    s.embedding_jacobian = [](const VecN&, const VecN&) { return MatN(MatN::Identity(3, 3)); };
    return s;
}

ScenarioSpec hyperbolic_plate(double gaussian_curvature, const VecN& lo, const VecN& hi)
{
    if (!(gaussian_curvature < 0.0)) throw ConfigError("hyperbolic_plate: curvature must be negative");
    const double a = std::sqrt(-gaussian_curvature);
    ScenarioSpec s;
    s.family = "hyperbolic_plate";
    s.codim = 1;
    s.chart_domain = {lo, hi};
    s.metric_fn = [a](const VecN& x) {
        MatN g = MatN::Zero(2, 2);
        g(0, 0) = 1.0;
        g(1, 1) = std::exp(2.0 * a * x(0));
        return g;
    };
    s.ii_fn = zero_ii(2, 1);
    s.normal_connection_fn = zero_connection(2, 1);
    s.bulk_mode = BulkMode::ProductPlate;
    return s;
}

ScenarioSpec cylinder_shell(double radius, const VecN& lo, const VecN& hi)
{
    if (!(radius > 0.0)) throw ConfigError("cylinder_shell: radius must be positive");
    const double r = radius;
    ScenarioSpec s;
    s.family = "cylinder_shell";
    s.codim = 1;
    s.chart_domain = {lo, hi};
    s.metric_fn = [](const VecN&) { return MatN(MatN::Identity(2, 2)); };
    s.ii_fn = [r](const VecN&) {
        MatN ii = MatN::Zero(2, 2);
        ii(0, 0) = 1.0 / r;
        return std::vector<MatN>{ii};
    };
    s.normal_connection_fn = zero_connection(2, 1);
    s.bulk_mode = BulkMode::Embedded;
    s.embedding = [r](const VecN& x, const VecN& xi) {
        const double th = x(0) / r, rho = r + xi(0);
        return vec({rho * std::cos(th), rho * std::sin(th), x(1)});
    };
    s.embedding_jacobian = [r](const VecN& x, const VecN& xi) {
        const double th = x(0) / r, scale = (r + xi(0)) / r;
        MatN j = MatN::Zero(3, 3);
        j.col(0) << -scale * std::sin(th), scale * std::cos(th), 0.0;
        j.col(1) << 0.0, 0.0, 1.0;
        j.col(2) << std::cos(th), std::sin(th), 0.0;
        return j;
    };
    return s;
}

ScenarioSpec sphere_cap_shell(double radius, const VecN& lo, const VecN& hi)
{
    if (!(radius > 0.0)) throw ConfigError("sphere_cap_shell: radius must be positive");
    const double big_r = radius;
    ScenarioSpec s;
    s.family = "sphere_cap_shell";
    s.codim = 1;
    s.chart_domain = {lo, hi};
    s.allow_degenerate_boundary = true;
    s.metric_fn = [big_r](const VecN& x) {
        MatN g = MatN::Zero(2, 2);
        g(0, 0) = big_r * big_r;
        g(1, 1) = big_r * big_r * std::sin(x(0)) * std::sin(x(0));
        return g;
    };
    s.ii_fn = [big_r](const VecN& x) {
        MatN ii = MatN::Zero(2, 2);
        ii(0, 0) = big_r;
        ii(1, 1) = big_r * std::sin(x(0)) * std::sin(x(0));
        return std::vector<MatN>{ii};
    };
    s.normal_connection_fn = zero_connection(2, 1);
    s.bulk_mode = BulkMode::Embedded;
    s.embedding = [big_r](const VecN& x, const VecN& xi) {
        const double rho = big_r + xi(0);
        return vec({rho * std::sin(x(0)) * std::cos(x(1)), rho * std::sin(x(0)) * std::sin(x(1)),
                    rho * std::cos(x(0))});
    };
    s.embedding_jacobian = [big_r](const VecN& x, const VecN& xi) {
        const double rho = big_r + xi(0);
        const double st = std::sin(x(0)), ct = std::cos(x(0)), sp = std::sin(x(1)), cp = std::cos(x(1));
        MatN j = MatN::Zero(3, 3);
        j.col(0) << rho * ct * cp, rho * ct * sp, -rho * st;
        j.col(1) << -rho * st * sp, rho * st * cp, 0.0;
        j.col(2) << st * cp, st * sp, ct;
        return j;
    };
    return s;
}

ScenarioSpec rod_scenario(double length, const std::vector<double>& curvature, double torsion)
{
    if (!(length > 0.0)) throw ConfigError("rod: length must be positive");
    if (curvature.size() != 2) throw ConfigError("rod: curvature needs two components");
    ScenarioSpec s;
    s.family = "rod";
    s.codim = 2;
    s.chart_domain = {vec({0.0}), vec({length})};
    s.metric_fn = [](const VecN&) { return MatN(MatN::Identity(1, 1)); };
    const double k1 = curvature[0], k2 = curvature[1];
    s.ii_fn = [k1, k2](const VecN&) {
        return std::vector<MatN>{MatN::Constant(1, 1, k1), MatN::Constant(1, 1, k2)};
    };
    s.normal_connection_fn = [torsion](const VecN&) {
        MatN w = MatN::Zero(2, 2);
        w(1, 0) = torsion;
        w(0, 1) = -torsion;
        return std::vector<MatN>{w};
    };
    s.bulk_mode = BulkMode::SyntheticExpansion;
    return s;
}

ScenarioSpec make_scenario(const ScenarioParams& p)
{
    auto box = [&](std::initializer_list<double> dlo, std::initializer_list<double> dhi) {
        VecN lo = p.lo.empty() ? vec(dlo) : vec(p.lo);
        VecN hi = p.hi.empty() ? vec(dhi) : vec(p.hi);
        if (lo.size() != static_cast<int>(dlo.size()) || hi.size() != lo.size())
            throw ConfigError("scenario '" + p.family + "': chart box has the wrong dimension");
        for (int a = 0; a < lo.size(); ++a)
            if (!(hi(a) > lo(a))) throw ConfigError("scenario '" + p.family + "': empty chart box");
        return std::pair{lo, hi};
    };
    if (p.family == "euclid_plate") {
        auto [lo, hi] = box({0.0, 0.0}, {1.0, 1.0});
        return euclid_plate(lo, hi);
    }
    if (p.family == "hyperbolic_plate") {
        auto [lo, hi] = box({-0.5, -0.5}, {0.5, 0.5});
        return hyperbolic_plate(p.curvature, lo, hi);
    }
    if (p.family == "cylinder_shell") {
        auto [lo, hi] = box({-0.5, -0.5}, {0.5, 0.5});
        return cylinder_shell(p.radius, lo, hi);
    }
    if (p.family == "sphere_cap_shell") {
        auto [lo, hi] = box({0.2, 0.0}, {std::numbers::pi / 3.0, 1.0});
        return sphere_cap_shell(p.radius, lo, hi);
    }
    if (p.family == "rod") return rod_scenario(p.length, p.rod_curvature, p.torsion);
    throw ConfigError("unknown scenario family '" + p.family + "'");
}

}  // namespace thinlimit
