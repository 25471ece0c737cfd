#pragma once

#include "thinlimit/scenarios.hpp"
#include "thinlimit/states.hpp"

#include <Eigen/QR>

namespace testsupport {

using namespace thinlimit;

inline MatN gaussian(int r, int c, Rng& rng, double sigma = 1.0)
{
    std::normal_distribution<double> nd(0.0, sigma);
    MatN m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = nd(rng);
    return m;
}

// Haar rotation: QR of a Gaussian matrix with the sign fix, then det fix.
inline MatN haar_rotation(int n, Rng& rng)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(gaussian(n, n, rng)));
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

inline ScenarioSpec family(const std::string& name)
{
    ScenarioParams p;
    p.family = name;
    return make_scenario(p);
}

inline ScenarioSpec centered_plate()
{
    ScenarioParams p;
    p.family = "euclid_plate";
    p.lo = {-0.5, -0.5};
    p.hi = {0.5, 0.5};
    return make_scenario(p);
}

inline VecN vec2(double a, double b)
{
    VecN v(2);
    v << a, b;
    return v;
}

// Flat metric in polar coordinates (r, theta) on r in [1, 3].
inline ScenarioSpec polar_plane()
{
    ScenarioSpec s;
    s.family = "polar_plane";
    s.dim_ambient = 3;
    s.codim = 1;
    s.chart_domain = {vec2(1.0, -1.0), vec2(3.0, 1.0)};
    s.metric_fn = [](const VecN& x) {
        MatN g = MatN::Zero(2, 2);
        g(0, 0) = 1.0;
        g(1, 1) = x(0) * x(0);
        return g;
    };
    s.ii_fn = [](const VecN&) { return std::vector<MatN>{MatN::Zero(2, 2)}; };
    s.normal_connection_fn = [](const VecN&) { return std::vector<MatN>(2, MatN::Zero(1, 1)); };
    s.bulk_mode = BulkMode::ProductPlate;
    return s;
}

}  // namespace testsupport
