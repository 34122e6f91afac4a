#pragma once

// Internal: per-run diagnostic context shared by the power-method, dp-pca
// and streaming engines. Caches the truth-derived bases and orthonormal
// complements so per-iteration records stay cheap.

#include <cmath>
#include <optional>

#include "npm/linalg.hpp"
#include "npm/matrix.hpp"
#include "npm/metrics.hpp"
#include "npm/power_method.hpp"

namespace npm::detail {

struct DiagContext {
    const EigenDecomposition* truth = nullptr;
    int k = 0;
    int q = 0;
    DenseMatrix u_k, u_q, comp_k, comp_q;  // complements empty when k or q == d
    double sigma_k = 0.0, sigma_q1 = 0.0;
    std::optional<double> g_offset;

    DiagContext(const EigenDecomposition& t, int k_in, int q_in, std::optional<double> g_epsilon,
                double g_constant)
        : truth(&t), k(k_in), q(q_in) {
        const int d = t.dim();
        u_k = t.leading_vectors(k);
        u_q = t.leading_vectors(q);
        if (k < d) comp_k = orthonormal_completion(u_k);
        if (q < d) comp_q = orthonormal_completion(u_q);
        sigma_k = t.sigma(k);
        sigma_q1 = t.sigma(q + 1);
        if (g_epsilon && sigma_k > 0.0) {
            const double eps = *g_epsilon;
            const double gap = sigma_k - sigma_q1;
            const double rho = (sigma_q1 + g_constant * eps * gap) / sigma_k;
            if (rho < 1.0) g_offset = g_constant * eps * gap / ((1.0 - rho) * sigma_k);
        }
    }

    IterationRecord record(int iteration, const DenseMatrix& x, const DenseMatrix* noise) const {
        IterationRecord r;
        r.iteration = iteration;
        if (noise != nullptr) {
            r.noise_spectral = matrix_norm(*noise, NormKind::spectral);
            r.noise_projected = matrix_norm(multiply_tn(u_q, *noise), NormKind::spectral);
        } else {
            r.noise_spectral = 0.0;
            r.noise_projected = 0.0;
        }
        r.sin_theta_k = sin_theta(u_k, x);
        r.tan_theta_k = comp_k.empty() ? 0.0 : tan_theta_with_complement(u_k, comp_k, x);
        r.tan_theta_q = comp_q.empty() ? 0.0 : tan_theta_with_complement(u_q, comp_q, x);
        r.cos_theta_q = cos_theta(u_q, x);
        r.h = comp_q.empty() ? 0.0 : rank_k_perturbation_with_complement(u_q, comp_q, x, k);
        if (g_offset && std::isfinite(*r.h)) r.g = *r.h - *g_offset;
        r.err_ratio_spectral =
            approx_error_ratio_from_truth(*truth, x, k, NormKind::spectral).value;
        r.err_ratio_frobenius =
            approx_error_ratio_from_truth(*truth, x, k, NormKind::frobenius).value;
        return r;
    }
};

}  // namespace npm::detail
