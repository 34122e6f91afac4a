#include "npm/generate.hpp"

#include <cmath>
#include <string>

#include "npm/linalg.hpp"

namespace npm {

SpectrumSpec SpectrumSpec::power_law(int d, double alpha) {
    if (d < 1) throw ConfigError("spectrum dimension must be positive");
    if (!(alpha > 1.0)) throw ConfigError("power-law alpha must be > 1");
    SpectrumSpec s;
    s.d_ = d;
    s.power_law_ = true;
    s.alpha_ = alpha;
    s.values_.resize(d);
    for (int k = 1; k <= d; ++k) s.values_[k - 1] = std::pow(static_cast<double>(k), -alpha);
    return s;
}

SpectrumSpec SpectrumSpec::explicit_values(std::vector<double> values) {
    if (values.empty()) throw ConfigError("spectrum values must be non-empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0)) throw ConfigError("spectrum values must be non-negative");
        if (i > 0 && values[i] > values[i - 1])
            throw ConfigError("spectrum values must be non-increasing");
    }
    SpectrumSpec s;
    s.d_ = static_cast<int>(values.size());
    s.values_ = std::move(values);
    return s;
}

DenseMatrix gaussian_matrix(int d, int p, double stddev, const RandomSource& rng,
                            std::uint64_t stream) {
    if (d < 1 || p < 1) throw ConfigError("gaussian_matrix dimensions must be positive");
    if (stddev < 0.0) throw ConfigError("gaussian_matrix stddev must be >= 0");
    DenseMatrix g(d, p);
    if (stddev == 0.0) return g;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < p; ++j)
            g(i, j) = stddev * rng.gaussian(stream, static_cast<std::uint64_t>(i) * p + j);
    if (!g.all_finite()) throw NumericalError("gaussian_matrix produced non-finite entries");
    return g;
}

DenseMatrix random_orthonormal(int d, int p, const RandomSource& rng, std::uint64_t stream) {
    if (d < p) throw ConfigError("random_orthonormal requires d >= p");
    return qr_factorize(gaussian_matrix(d, p, 1.0, rng, stream)).q;
}

PlantedPsd synth_psd(const SpectrumSpec& spec, const RandomSource& rng) {
    const int d = spec.dim();
    DenseMatrix u = random_orthonormal(d, d, rng, streams::kBasis);

    DenseMatrix scaled(u);
    for (int j = 0; j < d; ++j) {
        const double s = spec.values()[j];
        for (int i = 0; i < d; ++i) scaled(i, j) *= s;
    }
    DenseMatrix a = multiply_nt(scaled, u);
    // exact symmetry despite rounding in the product
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }

    PlantedPsd out;
    out.a = std::move(a);
    out.truth.vectors = std::move(u);
    out.truth.values = spec.values();
    return out;
}

}  // namespace npm
