#pragma once

// Test-only oracles, deliberately independent of the library kernels:
// naive matrix products, a small standalone Jacobi eigensolver and a plain
// power iteration, used to freeze expected values.

#include <algorithm>
#include <cmath>
#include <vector>

#include "npm/matrix.hpp"

namespace oracle {

inline npm::DenseMatrix matmul(const npm::DenseMatrix& a, const npm::DenseMatrix& b) {
    npm::DenseMatrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline npm::DenseMatrix transpose(const npm::DenseMatrix& m) { return m.transposed(); }

inline double frobenius(const npm::DenseMatrix& m) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

/// Eigenvalues of a small symmetric matrix, descending, via an
/// independently written one-sided Jacobi loop.
inline std::vector<double> sym_eigenvalues(npm::DenseMatrix a) {
    const int n = a.rows();
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
        if (off < 1e-14) break;
        for (int i = 0; i < n - 1; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (a(i, j) == 0.0) continue;
                const double phi = 0.5 * std::atan2(2.0 * a(i, j), a(j, j) - a(i, i));
                const double c = std::cos(phi), s = std::sin(phi);
                for (int r = 0; r < n; ++r) {
                    const double x = a(r, i), y = a(r, j);
                    a(r, i) = c * x - s * y;
                    a(r, j) = s * x + c * y;
                }
                for (int r = 0; r < n; ++r) {
                    const double x = a(i, r), y = a(j, r);
                    a(i, r) = c * x - s * y;
                    a(j, r) = s * x + c * y;
                }
            }
    }
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = a(i, i);
    std::sort(vals.rbegin(), vals.rend());
    return vals;
}

/// Singular values via the oracle eigensolver on the smaller Gram matrix.
inline std::vector<double> singular_values(const npm::DenseMatrix& m) {
    const bool tall = m.rows() >= m.cols();
    npm::DenseMatrix g = tall ? matmul(transpose(m), m) : matmul(m, transpose(m));
    std::vector<double> vals = sym_eigenvalues(g);
    for (double& v : vals) v = std::sqrt(std::max(v, 0.0));
    return vals;
}

/// Spectral norm by plain power iteration on M^T M.
inline double spectral_norm_power_iteration(const npm::DenseMatrix& m, int iters = 2000) {
    const int n = m.cols();
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(n) + i);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        std::vector<double> mv(m.rows(), 0.0);
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < n; ++j) mv[i] += m(i, j) * v[j];
        std::vector<double> next(n, 0.0);
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < n; ++j) next[j] += m(i, j) * mv[i];
        double norm = 0.0;
        for (double x : next) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        lambda = norm;
        for (int j = 0; j < n; ++j) v[j] = next[j] / norm;
    }
    return std::sqrt(lambda);
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    for (double x : xs) mv.mean += x;
    mv.mean /= static_cast<double>(xs.size());
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= static_cast<double>(xs.size());
    return mv;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const int n = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
