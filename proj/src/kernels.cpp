#include "npm/kernels.hpp"

#include <atomic>
#include <cstring>

namespace npm {

namespace serial {

void matmul(const double* a, int m, int kk, const double* b, int n, double* c) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < kk; ++k) s += a[static_cast<std::size_t>(i) * kk + k] * b[static_cast<std::size_t>(k) * n + j];
            c[static_cast<std::size_t>(i) * n + j] = s;
        }
    }
}

void matmul_tn(const double* a, int kk, int m, const double* b, int n, double* c) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < kk; ++k) s += a[static_cast<std::size_t>(k) * m + i] * b[static_cast<std::size_t>(k) * n + j];
            c[static_cast<std::size_t>(i) * n + j] = s;
        }
    }
}

void matmul_nt(const double* a, int m, int kk, const double* b, int n, double* c) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < kk; ++k) s += a[static_cast<std::size_t>(i) * kk + k] * b[static_cast<std::size_t>(j) * kk + k];
            c[static_cast<std::size_t>(i) * n + j] = s;
        }
    }
}

void apply_reflector(double* a, int rows, int cols, const double* v, double beta, int row0,
                     int col0) {
    for (int j = col0; j < cols; ++j) {
        double s = 0.0;
        for (int i = row0; i < rows; ++i) s += v[i] * a[static_cast<std::size_t>(i) * cols + j];
        s *= beta;
        for (int i = row0; i < rows; ++i) a[static_cast<std::size_t>(i) * cols + j] -= s * v[i];
    }
}

void matvec_tn(const double* a, int rows, int cols, const double* x, double* y) {
    for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) s += a[static_cast<std::size_t>(i) * cols + j] * x[i];
        y[j] = s;
    }
}

void rank1_update(double* a, int rows, int cols, const double* x, const double* y) {
    for (int i = 0; i < rows; ++i) {
        const double xi = x[i];
        double* row = a + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) row[j] += xi * y[j];
    }
}

}  // namespace serial

namespace kernels {

namespace {

std::atomic<Backend> g_backend{Backend::openmp};

// Below these sizes the parallel-region overhead dominates; fall back to
// the serial body. The per-element accumulation order is identical on both
// paths, so results do not depend on the choice.
constexpr long long kMinFlops = 131072;      // matmul family: m*kk*n
constexpr long long kMinCells = 131072;      // matvec / rank-1 updates
constexpr long long kMinReflectorCells = 131072;

}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

void matmul(const double* a, int m, int kk, const double* b, int n, double* c) {
    if (backend() == Backend::serial ||
        static_cast<long long>(m) * kk * n < kMinFlops) {
        serial::matmul(a, m, kk, b, n, c);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + static_cast<std::size_t>(i) * kk;
        for (int k = 0; k < kk; ++k) {
            const double aik = arow[k];
            const double* brow = b + static_cast<std::size_t>(k) * n;
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

void matmul_tn(const double* a, int kk, int m, const double* b, int n, double* c) {
    if (backend() == Backend::serial ||
        static_cast<long long>(m) * kk * n < kMinFlops) {
        serial::matmul_tn(a, kk, m, b, n, c);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
        for (int k = 0; k < kk; ++k) {
            const double aki = a[static_cast<std::size_t>(k) * m + i];
            const double* brow = b + static_cast<std::size_t>(k) * n;
            for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
}

void matmul_nt(const double* a, int m, int kk, const double* b, int n, double* c) {
    if (backend() == Backend::serial ||
        static_cast<long long>(m) * kk * n < kMinFlops) {
        serial::matmul_nt(a, m, kk, b, n, c);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * kk;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * kk;
            double s = 0.0;
            for (int k = 0; k < kk; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
}

void apply_reflector(double* a, int rows, int cols, const double* v, double beta, int row0,
                     int col0) {
    if (backend() == Backend::serial ||
        static_cast<long long>(rows - row0) * (cols - col0) < kMinReflectorCells) {
        serial::apply_reflector(a, rows, cols, v, beta, row0, col0);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int j = col0; j < cols; ++j) {
        double s = 0.0;
        for (int i = row0; i < rows; ++i) s += v[i] * a[static_cast<std::size_t>(i) * cols + j];
        s *= beta;
        for (int i = row0; i < rows; ++i) a[static_cast<std::size_t>(i) * cols + j] -= s * v[i];
    }
}

void matvec_tn(const double* a, int rows, int cols, const double* x, double* y) {
    if (backend() == Backend::serial ||
        static_cast<long long>(rows) * cols < kMinCells) {
        serial::matvec_tn(a, rows, cols, x, y);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) s += a[static_cast<std::size_t>(i) * cols + j] * x[i];
        y[j] = s;
    }
}

void rank1_update(double* a, int rows, int cols, const double* x, const double* y) {
    if (backend() == Backend::serial ||
        static_cast<long long>(rows) * cols < kMinCells) {
        serial::rank1_update(a, rows, cols, x, y);
        return;
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        const double xi = x[i];
        double* row = a + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) row[j] += xi * y[j];
    }
}

}  // namespace kernels
}  // namespace npm
