#pragma once

#include "npm/linalg.hpp"
#include "npm/matrix.hpp"

namespace npm {

/// Largest principal-angle sine between span(x) and span(u_k):
/// ||(I - X X^T) U_k||_2. Both inputs need orthonormal columns and
/// x.cols() >= u_k.cols().
double sin_theta(const DenseMatrix& u_k, const DenseMatrix& x);

/// Largest principal-angle tangent ||(U_comp^T X)(U^T X)^+||_2 where U_comp
/// is the deterministic orthonormal completion of u. Returns +inf when
/// U^T X is rank-deficient at tolerance.
double tan_theta(const DenseMatrix& u, const DenseMatrix& x);

/// tan_theta with a precomputed completion (d x (d-m)) of u.
double tan_theta_with_complement(const DenseMatrix& u, const DenseMatrix& u_comp,
                                 const DenseMatrix& x);

/// Rank-k perturbation of span(x) against u_q:
/// ||(U_comp^T X)(U_q^T X)^+ [I_k; 0]||_2, k <= q <= x.cols().
/// +inf when U_q^T X is rank-deficient at tolerance.
double rank_k_perturbation(const DenseMatrix& u_q, const DenseMatrix& x, int k);

double rank_k_perturbation_with_complement(const DenseMatrix& u_q, const DenseMatrix& u_comp,
                                           const DenseMatrix& x, int k);

/// Smallest singular value of U_q^T X, clamped to [0, 1].
double cos_theta(const DenseMatrix& u_q, const DenseMatrix& x);

struct AngleReport {
    double sin_theta_k = 0.0;
    double tan_theta_k = 0.0;  // may be +inf
    double cos_theta_q = 0.0;
    double tan_theta_q = 0.0;  // may be +inf
    double h = 0.0;            // may be +inf
};

/// All angle diagnostics for one iterate; k is u_k.cols(), q is u_q.cols().
AngleReport angle_report(const DenseMatrix& u_k, const DenseMatrix& u_q, const DenseMatrix& x);

struct ErrorRatio {
    double value = 0.0;
    bool is_ratio = true;  // false: zero optimum, value is the absolute error
};

/// ||A - X X^T A||_xi / ||A - A_k||_xi with A_k taken from the planted
/// truth. Falls back to the flagged absolute error when the optimal rank-k
/// error is zero.
ErrorRatio approx_error_ratio(const DenseMatrix& a, const EigenDecomposition& truth,
                              const DenseMatrix& x, int k, NormKind kind);

/// Same ratio computed from the truth decomposition alone, without forming
/// any d x d matrix (spectral norm via power iteration on a structured
/// operator). Used on memory-constrained paths.
ErrorRatio approx_error_ratio_from_truth(const EigenDecomposition& truth, const DenseMatrix& x,
                                         int k, NormKind kind);

}  // namespace npm
