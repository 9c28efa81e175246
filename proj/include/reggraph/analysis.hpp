#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <optional>

#include "reggraph/linop.hpp"
#include "reggraph/rng.hpp"

namespace reggraph {

/// Spectral summary of an operator: kernel basis, rank, and the constant
/// C = 1/sigma_min_nonzero of the bound ||w - P_ker w|| <= C ||A w||.
struct operator_analysis {
    mat kernel_basis;                  // orthonormal columns spanning ker(A)
    long rank = 0;
    std::optional<double> sigma_min_nonzero;
    std::optional<double> poincare_constant;  // 1 / sigma_min_nonzero
    mat kernel_projector;              // dense projector onto ker(A)
    double sigma_max = 0.0;
};

/// SVD-based kernel and Poincare-constant computation. Singular values at or
/// below tol * sigma_max count as zero (default tol matches the double
/// precision SVD noise floor).
inline operator_analysis analyze(const linop& op, double tol = 1e-10) {
    const mat a = op.to_dense();
    Eigen::JacobiSVD<mat> svd(a, Eigen::ComputeFullV);
    const vec sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma[0] : 0.0;

    operator_analysis out;
    out.sigma_max = smax;
    const long n = a.cols();
    long rank = 0;
    for (long i = 0; i < sigma.size(); ++i)
        if (sigma[i] > tol * smax && sigma[i] > 0.0) ++rank;
    out.rank = rank;
    if (rank > 0) {
        out.sigma_min_nonzero = sigma[rank - 1];
        out.poincare_constant = 1.0 / sigma[rank - 1];
    }
    const long kdim = n - rank;
    out.kernel_basis = svd.matrixV().rightCols(kdim);
    out.kernel_projector = out.kernel_basis * out.kernel_basis.transpose();
    return out;
}

/// Largest singular value by power iteration on A^T A, deterministic under the
/// seed. Returns the estimate and whether the iteration met the 1% criterion.
struct norm_estimate {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

inline norm_estimate operator_norm(const linop& op, int max_iters = 200, std::uint64_t seed = 1234) {
    if (op.norm_hint()) return {*op.norm_hint(), true, 0};
    rng gen(seed);
    vec x = gen.gaussian_vector(op.domain().dim());
    double nx = x.norm();
    if (nx == 0.0) return {0.0, true, 0};
    x /= nx;

    double est = 0.0;
    norm_estimate out;
    for (int it = 0; it < max_iters; ++it) {
        vec y = op.apply_adjoint(op.apply(x));
        const double ny = y.norm();
        out.iterations = it + 1;
        if (ny == 0.0) return {0.0, true, it + 1};
        const double next = std::sqrt(ny);  // ||A^T A x|| ~ sigma_max^2 at convergence
        if (it > 0 && std::abs(next - est) <= 0.5e-2 * next) {
            out.value = next;
            out.converged = true;
            return out;
        }
        est = next;
        x = y / ny;
    }
    out.value = est;
    out.converged = false;
    return out;
}

/// Convenience wrapper returning only the estimate.
inline double operator_norm_value(const linop& op, int max_iters = 200, std::uint64_t seed = 1234) {
    return operator_norm(op, max_iters, seed).value;
}

/// Orthonormal basis of the column span of m, rank-truncated by column-pivoted
/// QR at the given relative tolerance. Empty input gives a dim x 0 matrix.
inline mat orthonormal_span(const mat& m, double tol = 1e-10) {
    if (m.cols() == 0) return mat(m.rows(), 0);
    Eigen::ColPivHouseholderQR<mat> qr(m);
    qr.setThreshold(tol);
    const long r = qr.rank();
    mat q = qr.householderQ() * mat::Identity(m.rows(), r);
    return q;
}

/// Orthonormal basis of span(a) ∩ span(b), both given by (not necessarily
/// orthonormal) column sets. Uses the nullspace of [Qa, -Qb].
inline mat subspace_intersection(const mat& a, const mat& b, double tol = 1e-8) {
    const mat qa = orthonormal_span(a);
    const mat qb = orthonormal_span(b);
    if (qa.cols() == 0 || qb.cols() == 0) return mat(a.rows(), 0);
    mat stacked(qa.rows(), qa.cols() + qb.cols());
    stacked << qa, -qb;
    Eigen::JacobiSVD<mat> svd(stacked, Eigen::ComputeFullV);
    const vec sigma = svd.singularValues();
    long null_dim = stacked.cols() - sigma.size();  // dimensions beyond the reported spectrum
    for (long i = sigma.size() - 1; i >= 0; --i) {
        if (sigma[i] <= tol) ++null_dim;
        else break;
    }
    if (null_dim == 0) return mat(a.rows(), 0);
    mat z = svd.matrixV().rightCols(null_dim).topRows(qa.cols());
    return orthonormal_span(qa * z);
}

}  // namespace reggraph
