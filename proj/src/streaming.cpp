#include "npm/streaming.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "npm/generate.hpp"
#include "npm/kernels.hpp"
#include "npm/linalg.hpp"
#include "trace_diag.hpp"

namespace npm {

SampleStream gaussian_stream(const EigenDecomposition& truth, long long n,
                             const RandomSource& rng) {
    if (n < 1) throw ConfigError("gaussian_stream requires n >= 1");
    const int d = truth.dim();
    SampleStream s;
    s.d = d;
    s.n = n;
    s.seed = rng.seed();
    s.population_truth = truth;

    DenseMatrix scaled(truth.vectors);  // columns u_j * sqrt(sigma_j)
    for (int j = 0; j < d; ++j) {
        const double root = std::sqrt(truth.values[j]);
        for (int i = 0; i < d; ++i) scaled(i, j) *= root;
    }
    s.sample = [scaled = std::move(scaled), rng, d](long long index, double* out) {
        const std::uint64_t stream =
            RandomSource::derive_stream(streams::kSample, static_cast<std::uint64_t>(index));
        for (int i = 0; i < d; ++i) out[i] = 0.0;
        for (int j = 0; j < d; ++j) {
            const double g = rng.gaussian(stream, j);
            if (g == 0.0) continue;
            for (int i = 0; i < d; ++i) out[i] += scaled(i, j) * g;
        }
    };
    return s;
}

namespace {

// A_pop * x for A_pop = U diag(sigma) U^T, without forming A_pop.
DenseMatrix population_times(const EigenDecomposition& truth, const DenseMatrix& x) {
    DenseMatrix w = multiply_tn(truth.vectors, x);  // d x p
    for (int i = 0; i < w.rows(); ++i) {
        const double s = truth.values[i];
        for (int j = 0; j < w.cols(); ++j) w(i, j) *= s;
    }
    return multiply(truth.vectors, w);
}

}  // namespace

StreamingResult streaming_pca(const SampleStream& stream, int k, int p, int iterations,
                              const StreamingOptions& opts) {
    const int d = stream.d;
    if (d < 1 || !stream.sample) throw ConfigError("sample stream is not initialized");
    if (k < 1 || k > p || p > d) throw ConfigError("streaming_pca requires 1 <= k <= p <= d");
    if (iterations < 1) throw ConfigError("streaming_pca requires L >= 1");
    if (stream.n < iterations)
        throw ConfigError("streaming_pca requires n >= L (at least one sample per block)");

    const int q = opts.q == 0 ? k : opts.q;
    if (q < k || q > p) throw ConfigError("streaming_pca requires k <= q <= p");
    const bool has_truth = stream.population_truth.has_value();
    if (opts.record_diagnostics && !has_truth)
        throw ConfigError("diagnostics require the population truth");
    if (opts.capture_noise != nullptr && !has_truth)
        throw ConfigError("noise capture requires the population truth");

    const long long block = stream.n / iterations;

    StreamingResult out;
    out.block_size = block;
    const RandomSource rng(stream.seed);
    DenseMatrix x = random_orthonormal(d, p, rng, streams::kInit);

    std::optional<detail::DiagContext> diag;
    if (opts.record_diagnostics) {
        diag.emplace(*stream.population_truth, k, q, opts.g_epsilon, opts.g_constant);
        out.trace.records.push_back(diag->record(0, x, nullptr));
    }

    std::vector<double> z(d), w(p);
    for (int ell = 1; ell <= iterations; ++ell) {
        DenseMatrix y(d, p);
        const long long first = static_cast<long long>(ell - 1) * block;
        for (long long i = first; i < first + block; ++i) {
            stream.sample(i, z.data());
            kernels::matvec_tn(x.data(), d, p, z.data(), w.data());
            kernels::rank1_update(y.data(), d, p, z.data(), w.data());
        }
        if (!y.all_finite())
            throw NumericalError("block product became non-finite at iteration " +
                                 std::to_string(ell));

        DenseMatrix effective_noise;
        if (opts.capture_noise != nullptr || diag.has_value()) {
            if (has_truth) {
                effective_noise = y;
                effective_noise.scale(1.0 / static_cast<double>(block));
                effective_noise.add_scaled(population_times(*stream.population_truth, x), -1.0);
            }
            if (opts.capture_noise != nullptr) opts.capture_noise->push_back(effective_noise);
        }

        QrResult qr = qr_factorize(y);
        x = std::move(qr.q);
        out.trace.rank_collapse = out.trace.rank_collapse || qr.rank_deficient;

        if (diag) {
            const DenseMatrix* noise_ptr = effective_noise.empty() ? nullptr : &effective_noise;
            out.trace.records.push_back(diag->record(ell, x, noise_ptr));
        }
    }

    out.x = std::move(x);
    return out;
}

RoundCheckReport round_check(const SampleStream& stream, double b, int p, long long n_mc,
                             const std::vector<double>& t_grid, const RandomSource& rng) {
    if (!(b > 0.0)) throw ConfigError("round_check requires B > 0");
    if (p < 1 || p > stream.d) throw ConfigError("round_check requires 1 <= p <= d");
    if (n_mc < 1) throw ConfigError("round_check requires n_mc >= 1");
    for (double t : t_grid)
        if (!(t >= 1.0)) throw ConfigError("round_check t grid values must be >= 1");

    const int d = stream.d;
    constexpr int kRandomProjections = 16;
    std::vector<DenseMatrix> projections;
    projections.reserve(kRandomProjections + 1);
    for (int r = 0; r < kRandomProjections; ++r) {
        projections.push_back(random_orthonormal(
            d, p, rng, RandomSource::derive_stream(streams::kProjection, r)));
    }
    if (stream.population_truth && stream.population_truth->dim() == d)
        projections.push_back(stream.population_truth->leading_vectors(p));

    const std::size_t nt = t_grid.size();
    std::vector<long long> exceed_norm(nt, 0);
    std::vector<std::vector<long long>> exceed_proj(projections.size(),
                                                    std::vector<long long>(nt, 0));

    const double proj_scale = std::sqrt(b * p / static_cast<double>(d));
    const double norm_scale = std::sqrt(b);
    std::vector<double> z(d), w(p);
    for (long long i = 0; i < n_mc; ++i) {
        stream.sample(i, z.data());
        double nz = 0.0;
        for (int c = 0; c < d; ++c) nz += z[c] * z[c];
        nz = std::sqrt(nz);
        for (std::size_t t = 0; t < nt; ++t)
            if (nz >= t_grid[t] * norm_scale) ++exceed_norm[t];

        for (std::size_t pr = 0; pr < projections.size(); ++pr) {
            kernels::matvec_tn(projections[pr].data(), d, p, z.data(), w.data());
            double nw = 0.0;
            for (int c = 0; c < p; ++c) nw += w[c] * w[c];
            nw = std::sqrt(nw);
            for (std::size_t t = 0; t < nt; ++t)
                if (nw >= t_grid[t] * proj_scale) ++exceed_proj[pr][t];
        }
    }

    RoundCheckReport report;
    report.b = b;
    report.p = p;
    report.t_grid = t_grid;
    report.all_pass = true;
    for (std::size_t t = 0; t < nt; ++t) {
        const double f_norm = static_cast<double>(exceed_norm[t]) / n_mc;
        long long worst = 0;
        for (const auto& counts : exceed_proj) worst = std::max(worst, counts[t]);
        const double f_proj = static_cast<double>(worst) / n_mc;
        report.freq_norm.push_back(f_norm);
        report.freq_proj.push_back(f_proj);

        const double limit = std::exp(-t_grid[t]);
        auto slack = [&](double f) { return 2.0 * std::sqrt(f * (1.0 - f) / n_mc); };
        const bool ok = f_norm <= limit + slack(f_norm) && f_proj <= limit + slack(f_proj);
        report.pass.push_back(ok);
        report.all_pass = report.all_pass && ok;
    }
    return report;
}

double sample_complexity_expression(double sigma_k, double sigma_q1, double b, int p, int d,
                                    double epsilon) {
    if (!(sigma_k > sigma_q1))
        throw ConfigError("zero spectral gap: sample complexity inapplicable");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0,1)");
    if (!(b > 0.0) || p < 1 || d < 1) throw ConfigError("sample complexity requires B > 0, p, d >= 1");
    const double gap = sigma_k - sigma_q1;
    const double logd = std::log(static_cast<double>(d));
    return sigma_k * b * b * p * logd * logd / (gap * gap * gap * d * epsilon * epsilon);
}

double sample_complexity_expression(const EigenDecomposition& truth, int k, int q, double b,
                                    int p, int d, double epsilon) {
    return sample_complexity_expression(truth.sigma(k), truth.sigma(q + 1), b, p, d, epsilon);
}

}  // namespace npm
