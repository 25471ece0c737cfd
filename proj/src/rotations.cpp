#include "thinlimit/rotations.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace thinlimit {

FramePair::FramePair(const MatN& source_metric) : metric_(source_metric)
{
    Eigen::LLT<MatN> llt(metric_);
    if (llt.info() != Eigen::Success)
        throw GeometryError("FramePair: source metric is not positive definite");
    // G = C C^T, L = C^{-T}.
    MatN c = llt.matrixL();
    factor_inv_ = c.transpose();
    factor_ = factor_inv_.inverse();
}

FramePair::FramePair(const MatN& source_metric, const MatN& orthonormalizer)
    : metric_(source_metric), factor_(orthonormalizer)
{
    const int n = static_cast<int>(metric_.rows());
    MatN check = factor_.transpose() * metric_ * factor_ - MatN::Identity(n, n);
    if (!(check.cwiseAbs().maxCoeff() <= 1e-10))
        throw GeometryError("FramePair: supplied factor does not orthonormalize the metric");
    factor_inv_ = factor_.inverse();
}

FramePair FramePair::euclidean(int n)
{
    FramePair f;
    f.metric_ = MatN::Identity(n, n);
    f.factor_ = MatN::Identity(n, n);
    f.factor_inv_ = MatN::Identity(n, n);
    return f;
}

SignedPolar signed_polar(const MatN& a_hat)
{
    const int n = static_cast<int>(a_hat.rows());
    Eigen::JacobiSVD<MatN> svd(a_hat, Eigen::ComputeFullU | Eigen::ComputeFullV);
    MatN u = svd.matrixU();
    const MatN& v = svd.matrixV();
    SignedPolar out;
    out.singular = svd.singularValues();
    if ((u * v.transpose()).determinant() < 0.0) {
        u.col(n - 1) *= -1.0;
        out.singular(n - 1) *= -1.0;
        out.reflected = true;
    }
    out.rotation = u * v.transpose();
    out.gap = n > 1 ? std::abs(svd.singularValues()(n - 2) - svd.singularValues()(n - 1)) : 1.0;
    return out;
}

double dist_so_squared(const MatN& a, const FramePair& frame)
{
    const SignedPolar p = signed_polar(a * frame.factor());
    return (p.singular.array() - 1.0).square().sum();
}

double dist_so(const MatN& a, const FramePair& frame) { return std::sqrt(dist_so_squared(a, frame)); }

double dist_so(const MatN& a) { return dist_so(a, FramePair::euclidean(static_cast<int>(a.rows()))); }

MatN nearest_rotation(const MatN& a, const FramePair& frame)
{
    return signed_polar(a * frame.factor()).rotation * frame.factor_inverse();
}

MatN nearest_rotation(const MatN& a) { return signed_polar(a).rotation; }

double sym_linearized(const MatN& a) { return 0.5 * (a + a.transpose()).norm(); }

bool projection_ambiguous(const SignedPolar& polar, double threshold)
{
    const int n = static_cast<int>(polar.singular.size());
    const bool nonpositive = polar.reflected || std::abs(polar.singular(n - 1)) == 0.0;
    return nonpositive && polar.gap < threshold;
}

}  // namespace thinlimit
