#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "npm/matrix.hpp"
#include "npm/power_method.hpp"
#include "npm/random.hpp"

namespace npm {

/// Deterministic sample stream: sample(i) writes the d entries of z_i and
/// is a pure function of (seed, i), so samples can be regenerated at will.
struct SampleStream {
    int d = 0;
    long long n = 0;
    std::uint64_t seed = 0;
    std::function<void(long long index, double* out)> sample;
    std::optional<EigenDecomposition> population_truth;
};

/// Gaussian stream with population covariance U diag(sigma) U^T:
/// z_i = U diag(sqrt(sigma)) g_i.
SampleStream gaussian_stream(const EigenDecomposition& truth, long long n,
                             const RandomSource& rng);

struct StreamingOptions {
    int q = 0;  // 0 -> k
    bool record_diagnostics = false;
    std::optional<double> g_epsilon;
    double g_constant = 0.25;

    /// When set (requires population truth), receives the per-iteration
    /// effective noise G_l = Y_l / T - A X_{l-1}, the deviation of the
    /// T-normalized block product from the population update.
    std::vector<DenseMatrix>* capture_noise = nullptr;
};

struct StreamingResult {
    DenseMatrix x;
    IterationTrace trace;
    long long block_size = 0;  // T = floor(n / L)
};

/// Blocked streaming power update: each of the L blocks accumulates
/// Y = sum_i z_i (z_i^T X) one sample at a time and re-orthonormalizes.
/// The update path allocates nothing larger than d x p; trailing
/// n - L*floor(n/L) samples are discarded.
StreamingResult streaming_pca(const SampleStream& stream, int k, int p, int iterations,
                              const StreamingOptions& opts = {});

struct RoundCheckReport {
    double b = 0.0;
    int p = 0;
    std::vector<double> t_grid;
    std::vector<double> freq_norm;  // empirical Pr[||z|| >= t*sqrt(B)]
    std::vector<double> freq_proj;  // worst projection: Pr[||Pi z|| >= t*sqrt(B p/d)]
    std::vector<bool> pass;         // both frequencies <= exp(-t) + 2 SE
    bool all_pass = false;
};

/// Empirical tail check of the two round-distribution events over n_mc
/// samples, using 16 random rank-p projections plus the top-p population
/// projection when the stream carries its truth.
RoundCheckReport round_check(const SampleStream& stream, double b, int p, long long n_mc,
                             const std::vector<double>& t_grid, const RandomSource& rng);

/// Sample-complexity comparator
/// sigma_k B^2 p ln(d)^2 / ((sigma_k - sigma_{q+1})^3 d eps^2).
double sample_complexity_expression(double sigma_k, double sigma_q1, double b, int p, int d,
                                    double epsilon);
double sample_complexity_expression(const EigenDecomposition& truth, int k, int q, double b,
                                    int p, int d, double epsilon);

}  // namespace npm
