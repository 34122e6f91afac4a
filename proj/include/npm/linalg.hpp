#pragma once

#include <vector>

#include "npm/matrix.hpp"

namespace npm {

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

/// a^T * b
DenseMatrix multiply_tn(const DenseMatrix& a, const DenseMatrix& b);

/// a * b^T
DenseMatrix multiply_nt(const DenseMatrix& a, const DenseMatrix& b);

struct QrResult {
    DenseMatrix q;  // d x p, orthonormal columns
    DenseMatrix r;  // p x p, upper-triangular, non-negative diagonal
    bool rank_deficient = false;
};

/// Householder QR of a d x p matrix (d >= p) with the sign convention
/// R_ii >= 0. A column whose pivot falls below 1e-12 * ||M||_F is flagged
/// and its Q column is replaced by a deterministic orthonormal completion,
/// so the result always has orthonormal columns.
QrResult qr_factorize(const DenseMatrix& m);

struct SymEigOptions {
    double asym_tol = 1e-10;        // max allowed entrywise asymmetry
    double negative_floor = -1e-10; // eigenvalues above this are clipped to 0
    int max_sweeps = 100;
    double off_tol_factor = 1e-13;  // stop when off(A) <= factor * ||A||_F
    int dim_cap = 512;
};

/// Symmetric PSD eigendecomposition via cyclic Jacobi sweeps.
/// Deterministic; values sorted descending; eigenvalues in
/// [negative_floor, 0) clipped to 0, anything lower is an error.
EigenDecomposition sym_eig(const DenseMatrix& a, const SymEigOptions& opts = {});

/// Moore-Penrose pseudo-inverse via eigendecomposition of the smaller Gram
/// matrix. tol <= 0 selects the default 1e-12 * max(q,p) * sigma_max.
DenseMatrix pseudo_inverse(const DenseMatrix& m, double tol = 0.0);

enum class NormKind { spectral, frobenius, entrywise_max };

double matrix_norm(const DenseMatrix& m, NormKind kind);

/// Singular values (descending) from the eigenvalues of the smaller Gram
/// matrix; tiny negative eigenvalues are treated as 0.
std::vector<double> singular_values(const DenseMatrix& m);

/// Deterministic orthonormal completion of an orthonormal d x m basis to
/// d x (d-m): greedy Gram-Schmidt over the canonical basis vectors, always
/// picking the candidate with the largest residual.
DenseMatrix orthonormal_completion(const DenseMatrix& u);

}  // namespace npm
