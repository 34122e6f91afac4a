#pragma once

#include <cstddef>

namespace npm {

// Serial reference kernels. Plain textbook loops, kept as the ground truth
// the OpenMP kernels are tested and benchmarked against. All buffers are
// row-major.
namespace serial {

/// c[m x n] = a[m x kk] * b[kk x n]
void matmul(const double* a, int m, int kk, const double* b, int n, double* c);

/// c[m x n] = a^T * b with a[kk x m], b[kk x n]
void matmul_tn(const double* a, int kk, int m, const double* b, int n, double* c);

/// c[m x n] = a * b^T with a[m x kk], b[n x kk]
void matmul_nt(const double* a, int m, int kk, const double* b, int n, double* c);

/// Apply the Householder reflector I - beta*v*v^T (v has `rows` entries,
/// zero above row0) to columns [col0, cols) of a[rows x cols].
void apply_reflector(double* a, int rows, int cols, const double* v, double beta, int row0,
                     int col0);

/// y[cols] = a^T x with a[rows x cols], x[rows]
void matvec_tn(const double* a, int rows, int cols, const double* x, double* y);

/// a[rows x cols] += x * y^T
void rank1_update(double* a, int rows, int cols, const double* x, const double* y);

}  // namespace serial

// OpenMP kernels. Each output element is produced by exactly one thread
// with the same accumulation order as the serial reference, so results are
// bit-identical to npm::serial at any thread count.
namespace kernels {

enum class Backend { serial, openmp };

Backend backend();
void set_backend(Backend b);

void matmul(const double* a, int m, int kk, const double* b, int n, double* c);
void matmul_tn(const double* a, int kk, int m, const double* b, int n, double* c);
void matmul_nt(const double* a, int m, int kk, const double* b, int n, double* c);
void apply_reflector(double* a, int rows, int cols, const double* v, double beta, int row0,
                     int col0);
void matvec_tn(const double* a, int rows, int cols, const double* x, double* y);
void rank1_update(double* a, int rows, int cols, const double* x, const double* y);

}  // namespace kernels
}  // namespace npm
