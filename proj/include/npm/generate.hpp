#pragma once

#include <vector>

#include "npm/matrix.hpp"
#include "npm/random.hpp"

namespace npm {

/// Spectrum of a synthetic PSD matrix: either explicit non-increasing
/// non-negative values or a power-law sigma_k = k^(-alpha), alpha > 1.
class SpectrumSpec {
public:
    static SpectrumSpec power_law(int d, double alpha);
    static SpectrumSpec explicit_values(std::vector<double> values);

    int dim() const { return d_; }
    const std::vector<double>& values() const { return values_; }
    bool is_power_law() const { return power_law_; }
    double alpha() const { return alpha_; }

private:
    SpectrumSpec() = default;
    int d_ = 0;
    bool power_law_ = false;
    double alpha_ = 0.0;
    std::vector<double> values_;
};

/// d x p matrix of iid N(0, stddev^2) entries, deterministic per
/// (rng.seed, stream).
DenseMatrix gaussian_matrix(int d, int p, double stddev, const RandomSource& rng,
                            std::uint64_t stream = streams::kDefault);

/// QR orthonormalization of a d x p standard Gaussian matrix (Haar frame).
DenseMatrix random_orthonormal(int d, int p, const RandomSource& rng,
                               std::uint64_t stream = streams::kDefault);

struct PlantedPsd {
    DenseMatrix a;             // d x d symmetric PSD
    EigenDecomposition truth;  // planted basis and exact spectrum
};

/// A = U diag(sigma) U^T with a Haar-random U; the planted decomposition is
/// returned exactly.
PlantedPsd synth_psd(const SpectrumSpec& spec, const RandomSource& rng);

}  // namespace npm
