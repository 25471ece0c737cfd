#pragma once

#include "thinlimit/types.hpp"

namespace thinlimit {

/// Pairs a source metric G (SPD) with the Euclidean target. Caches a factor L
/// with L^T G L = I so that frame-dependent quantities reduce to Euclidean
/// ones via A -> A L. Any such L works: the results below are invariant under
/// L -> L R for rotations R.
class FramePair {
public:
    FramePair() = default;

    /// Factor from the Cholesky decomposition of `source_metric`.
    explicit FramePair(const MatN& source_metric);

    /// Use a caller-supplied factor (e.g. the inverse of a bulk frame J with
    /// G = J^T J). Throws GeometryError if L^T G L deviates from I by > 1e-10.
    FramePair(const MatN& source_metric, const MatN& orthonormalizer);

    static FramePair euclidean(int n);

    const MatN& metric() const { return metric_; }
    const MatN& factor() const { return factor_; }
    const MatN& factor_inverse() const { return factor_inv_; }
    int dim() const { return static_cast<int>(metric_.rows()); }

private:
    MatN metric_;
    MatN factor_;
    MatN factor_inv_;
};

/// Signed polar data of a Euclidean-frame matrix: A = U diag(s) V^T with the
/// smallest entry of s negated when det A < 0, so that R = U V^T (after the
/// matching column flip) is the nearest rotation.
struct SignedPolar {
    MatN rotation;
    VecN singular;          // signed, descending in magnitude
    bool reflected = false; // det A < 0
    double gap = 0.0;       // sigma_{n-1} - sigma_n (unsigned)
};

SignedPolar signed_polar(const MatN& a_hat);

/// dist(A, SO(n)) with respect to `frame`: sqrt(sum (s_i - 1)^2) of A L.
double dist_so(const MatN& a, const FramePair& frame);
double dist_so(const MatN& a);
double dist_so_squared(const MatN& a, const FramePair& frame);

/// Nearest element of SO(n) in the frame: Q with Q^T Q = G and |(A - Q) L| = dist.
/// At ties the routine returns what the fixed SVD produces; A = 0 maps to the
/// identity frame (Q = L^{-1}).
MatN nearest_rotation(const MatN& a, const FramePair& frame);
MatN nearest_rotation(const MatN& a);

/// |A + A^T| / 2, Frobenius.
double sym_linearized(const MatN& a);

/// True when the nearest rotation of A L is not unique to within `threshold`:
/// det <= 0 with the two smallest singular values closer than `threshold`.
bool projection_ambiguous(const SignedPolar& polar, double threshold = 1e-8);

}  // namespace thinlimit
