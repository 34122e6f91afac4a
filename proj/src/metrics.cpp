#include "npm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "npm/kernels.hpp"

namespace npm {

namespace {

constexpr double kOrthoTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_orthonormal(const DenseMatrix& m, const char* name) {
    DenseMatrix gram = multiply_tn(m, m);
    for (int i = 0; i < gram.rows(); ++i)
        for (int j = 0; j < gram.cols(); ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(gram(i, j) - want) > kOrthoTol)
                throw ConfigError(std::string(name) + " must have orthonormal columns");
        }
}

// Smallest/largest singular values of a q x p matrix with q <= p.
std::pair<double, double> sigma_extremes(const DenseMatrix& m) {
    std::vector<double> s = singular_values(m);
    return {s.back(), s.front()};
}

bool rank_deficient(double sigma_min, double sigma_max, int max_dim) {
    const double tol = std::max(1e-12 * max_dim * sigma_max, 1e-15);
    return sigma_min <= tol;
}

}  // namespace

double sin_theta(const DenseMatrix& u_k, const DenseMatrix& x) {
    if (u_k.rows() != x.rows()) throw ConfigError("sin_theta: ambient dimensions differ");
    if (x.cols() < u_k.cols()) throw ConfigError("sin_theta requires x.cols() >= u_k.cols()");
    require_orthonormal(u_k, "u_k");
    require_orthonormal(x, "x");

    DenseMatrix xtu = multiply_tn(x, u_k);      // p x k
    DenseMatrix proj = multiply(x, xtu);        // d x k
    DenseMatrix residual(u_k);
    residual.add_scaled(proj, -1.0);
    const double s = matrix_norm(residual, NormKind::spectral);
    return std::min(s, 1.0);
}

double tan_theta_with_complement(const DenseMatrix& u, const DenseMatrix& u_comp,
                                 const DenseMatrix& x) {
    if (u.rows() != x.rows()) throw ConfigError("tan_theta: ambient dimensions differ");
    if (x.cols() < u.cols()) throw ConfigError("tan_theta requires x.cols() >= u.cols()");
    require_orthonormal(u, "u");
    require_orthonormal(x, "x");

    DenseMatrix w = multiply_tn(u, x);  // m x p
    auto [smin, smax] = sigma_extremes(w);
    if (rank_deficient(smin, smax, std::max(w.rows(), w.cols()))) return kInf;

    DenseMatrix w_pinv = pseudo_inverse(w);             // p x m
    DenseMatrix comp_x = multiply_tn(u_comp, x);        // (d-m) x p
    DenseMatrix t = multiply(comp_x, w_pinv);           // (d-m) x m
    return matrix_norm(t, NormKind::spectral);
}

double tan_theta(const DenseMatrix& u, const DenseMatrix& x) {
    DenseMatrix comp = orthonormal_completion(u);
    return tan_theta_with_complement(u, comp, x);
}

double rank_k_perturbation_with_complement(const DenseMatrix& u_q, const DenseMatrix& u_comp,
                                           const DenseMatrix& x, int k) {
    const int q = u_q.cols();
    if (k < 1 || k > q) throw ConfigError("rank_k_perturbation requires 1 <= k <= q");
    if (x.cols() < q) throw ConfigError("rank_k_perturbation requires x.cols() >= q");
    require_orthonormal(u_q, "u_q");
    require_orthonormal(x, "x");

    DenseMatrix w = multiply_tn(u_q, x);  // q x p
    auto [smin, smax] = sigma_extremes(w);
    if (rank_deficient(smin, smax, std::max(w.rows(), w.cols()))) return kInf;

    DenseMatrix selector = pseudo_inverse(w).columns(0, k);  // p x k: (U_q^T X)^+ [I_k; 0]
    DenseMatrix comp_x = multiply_tn(u_comp, x);             // (d-q) x p
    DenseMatrix t = multiply(comp_x, selector);              // (d-q) x k
    return matrix_norm(t, NormKind::spectral);
}

double rank_k_perturbation(const DenseMatrix& u_q, const DenseMatrix& x, int k) {
    DenseMatrix comp = orthonormal_completion(u_q);
    return rank_k_perturbation_with_complement(u_q, comp, x, k);
}

double cos_theta(const DenseMatrix& u_q, const DenseMatrix& x) {
    if (u_q.rows() != x.rows()) throw ConfigError("cos_theta: ambient dimensions differ");
    if (x.cols() < u_q.cols()) throw ConfigError("cos_theta requires x.cols() >= u_q.cols()");
    require_orthonormal(u_q, "u_q");
    require_orthonormal(x, "x");
    DenseMatrix w = multiply_tn(u_q, x);
    auto [smin, smax] = sigma_extremes(w);
    (void)smax;
    return std::clamp(smin, 0.0, 1.0);
}

AngleReport angle_report(const DenseMatrix& u_k, const DenseMatrix& u_q, const DenseMatrix& x) {
    AngleReport r;
    r.sin_theta_k = sin_theta(u_k, x);
    r.tan_theta_k = tan_theta(u_k, x);
    DenseMatrix comp_q = orthonormal_completion(u_q);
    r.tan_theta_q = tan_theta_with_complement(u_q, comp_q, x);
    r.cos_theta_q = cos_theta(u_q, x);
    r.h = rank_k_perturbation_with_complement(u_q, comp_q, x, u_k.cols());
    return r;
}

namespace {

double optimal_error(const EigenDecomposition& truth, int k, NormKind kind) {
    const int d = truth.dim();
    if (kind == NormKind::spectral) return truth.sigma(k + 1);
    double s = 0.0;
    for (int i = k + 1; i <= d; ++i) s += truth.sigma(i) * truth.sigma(i);
    return std::sqrt(s);
}

// Spectral norm of (I - X X^T) U S via power iteration on the operator
// v -> S (I - W W^T) S v with W = U^T X (orthonormal columns). Never forms
// a d x d matrix.
double residual_spectral_from_truth(const EigenDecomposition& truth, const DenseMatrix& w) {
    const int d = truth.dim();
    const int p = w.cols();
    std::vector<double> v(d), t(d), wv(p);

    auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (int i = 0; i < d; ++i) t[i] = truth.values[i] * in[i];
        kernels::matvec_tn(w.data(), d, p, t.data(), wv.data());
        for (int i = 0; i < d; ++i) {
            double proj = 0.0;
            for (int j = 0; j < p; ++j) proj += w(i, j) * wv[j];
            out[i] = truth.values[i] * (t[i] - proj);
        }
    };

    double best = 0.0;
    for (int start = 0; start < 3; ++start) {
        for (int i = 0; i < d; ++i) {
            switch (start) {
                case 0: v[i] = 1.0; break;
                case 1: v[i] = (i % 2 == 0) ? 1.0 : -1.0; break;
                default: v[i] = 1.0 / (1.0 + i); break;
            }
        }
        double lambda = 0.0;
        std::vector<double> next(d);
        for (int iter = 0; iter < 400; ++iter) {
            apply(v, next);
            double norm = 0.0;
            for (int i = 0; i < d; ++i) norm += next[i] * next[i];
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                lambda = 0.0;
                break;
            }
            lambda = norm;  // Rayleigh quotient of the PSD operator at unit v
            for (int i = 0; i < d; ++i) v[i] = next[i] / norm;
        }
        best = std::max(best, lambda);
    }
    return std::sqrt(best);
}

}  // namespace

ErrorRatio approx_error_ratio(const DenseMatrix& a, const EigenDecomposition& truth,
                              const DenseMatrix& x, int k, NormKind kind) {
    if (kind == NormKind::entrywise_max) throw ConfigError("approx_error_ratio: spectral or frobenius only");
    if (k < 1 || k >= truth.dim()) throw ConfigError("approx_error_ratio requires 1 <= k < d");
    DenseMatrix xta = multiply_tn(x, a);   // p x d
    DenseMatrix proj = multiply(x, xta);   // d x d
    DenseMatrix residual(a);
    residual.add_scaled(proj, -1.0);
    const double err = matrix_norm(residual, kind);
    const double denom = optimal_error(truth, k, kind);
    if (denom == 0.0) return {err, false};
    return {err / denom, true};
}

ErrorRatio approx_error_ratio_from_truth(const EigenDecomposition& truth, const DenseMatrix& x,
                                         int k, NormKind kind) {
    if (kind == NormKind::entrywise_max) throw ConfigError("approx_error_ratio: spectral or frobenius only");
    if (k < 1 || k >= truth.dim()) throw ConfigError("approx_error_ratio requires 1 <= k < d");
    const int d = truth.dim();
    DenseMatrix w = multiply_tn(truth.vectors, x);  // d x p, orthonormal columns

    double err = 0.0;
    if (kind == NormKind::frobenius) {
        // ||(I - X X^T) U S||_F^2 = sum_j sigma_j^2 (1 - ||w_j||^2)
        for (int i = 0; i < d; ++i) {
            double row = 0.0;
            for (int j = 0; j < w.cols(); ++j) row += w(i, j) * w(i, j);
            err += truth.values[i] * truth.values[i] * std::max(0.0, 1.0 - row);
        }
        err = std::sqrt(err);
    } else {
        err = residual_spectral_from_truth(truth, w);
    }
    const double denom = optimal_error(truth, k, kind);
    if (denom == 0.0) return {err, false};
    return {err / denom, true};
}

}  // namespace npm
