#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "npm/matrix.hpp"
#include "npm/random.hpp"

namespace npm {

/// Per-iteration perturbation of the subspace iteration.
struct NoiseModel {
    enum class Kind { none, iid_gaussian, callback };

    Kind kind = Kind::none;
    double stddev = 0.0;
    /// Deterministic generator keyed by (seed, iteration); must return a
    /// finite d x p matrix.
    std::function<DenseMatrix(std::uint64_t seed, int iteration)> generator;

    static NoiseModel none() { return {}; }
    static NoiseModel iid_gaussian(double stddev);
    static NoiseModel with_callback(std::function<DenseMatrix(std::uint64_t, int)> fn);
};

struct RunConfig {
    int k = 1;  // target rank
    int q = 1;  // intermediate rank, k <= q <= p
    int p = 1;  // iteration rank
    int iterations = 1;
    std::uint64_t seed = 0;
    bool record_diagnostics = false;

    /// When set, the trace records g = h - C*eps*(sigma_k - sigma_{q+1}) /
    /// ((1 - rho)*sigma_k) alongside h.
    std::optional<double> g_epsilon;
    double g_constant = 0.25;
};

struct IterationRecord {
    int iteration = 0;
    double noise_spectral = 0.0;
    std::optional<double> noise_projected;  // ||U_q^T G||_2; absent without truth
    std::optional<double> sin_theta_k;
    std::optional<double> tan_theta_k;
    std::optional<double> tan_theta_q;
    std::optional<double> cos_theta_q;
    std::optional<double> h;
    std::optional<double> g;
    std::optional<double> err_ratio_spectral;
    std::optional<double> err_ratio_frobenius;
};

struct IterationTrace {
    std::vector<IterationRecord> records;  // iterations 0..L when recorded
    bool rank_collapse = false;
};

struct PowerMethodResult {
    DenseMatrix x;  // d x p, orthonormal columns
    IterationTrace trace;
};

/// Subspace iteration with per-iteration noise: Y = A X + G, then QR.
/// `truth` is required when cfg.record_diagnostics is set; `initial_x`
/// overrides the seeded random orthonormal start.
PowerMethodResult noisy_power_method(const DenseMatrix& a, const RunConfig& cfg,
                                     const NoiseModel& noise,
                                     const EigenDecomposition* truth = nullptr,
                                     const DenseMatrix* initial_x = nullptr);

/// ceil((sigma_k / (sigma_k - sigma_q1)) * ln(tau * dim / epsilon)),
/// clamped to >= 1. Errors on a zero gap.
int required_iterations(double sigma_k, double sigma_q1, double dim, double epsilon, double tau);
int required_iterations(const EigenDecomposition& truth, int k, int q, double epsilon, double tau);

/// The same quantity before the ceiling, for scaling checks.
double required_iterations_real(double sigma_k, double sigma_q1, double dim, double epsilon,
                                double tau);

/// Iteration count variant with log(d) in place of log(tau*d/epsilon),
/// used as the default for distributed private runs.
int iterations_log_d(double sigma_k, double sigma_q1, double dim);
int iterations_log_d(const EigenDecomposition& truth, int k, int q);

struct ToleranceBudget {
    enum class Mode { gap_dependent, gap_independent };

    Mode mode = Mode::gap_dependent;
    double bound_g2 = 0.0;   // limit on ||G||_2
    double bound_uqg = 0.0;  // limit on ||U_q^T G||_2 (U_k^T in the gap-independent mode)
    double epsilon = 0.0;
    double tau = 0.0;
    int iterations = 0;  // companion iteration count
    /// epsilon <= (sigma_q/sigma_k) * min{1/ln(sigma_k/sigma_q), 1/ln(tau*d)}
    /// with unit constants; a warning flag, never an error.
    bool epsilon_admissible = true;
};

/// Gap-dependent budget: bound_g2 = eps*(sigma_k - sigma_{q+1}),
/// bound_uqg = bound_g2 * (sqrt(p) - sqrt(q-1)) / (tau*sqrt(d)).
ToleranceBudget noise_tolerance(double sigma_k, double sigma_q, double sigma_q1, int q, int p,
                                double dim, double epsilon, double tau);
ToleranceBudget noise_tolerance(const EigenDecomposition& truth, int k, int q, int p,
                                double epsilon, double tau);

/// Gap-independent budget: bound_g2 = eps^2*sigma_{k+1},
/// bound_uqg = eps^2*(sqrt(p) - sqrt(k-1))*sigma_{k+1} / (tau*sqrt(d)),
/// iterations = ceil((1/eps) * ln(tau*d/eps)).
ToleranceBudget gap_independent_tolerance(double sigma_k1, int k, int p, double dim,
                                          double epsilon, double tau);
ToleranceBudget gap_independent_tolerance(const EigenDecomposition& truth, int k, int p,
                                          double epsilon, double tau);

struct ComplianceReport {
    std::vector<bool> compliant;          // one flag per iteration 1..L
    std::optional<int> first_violation;   // iteration index of the first breach
    bool projected_checked = true;        // false when traces lack projected norms
};

/// Compares recorded noise norms against a budget, iteration by iteration.
ComplianceReport check_noise_compliance(const IterationTrace& trace,
                                        const ToleranceBudget& budget);

}  // namespace npm
