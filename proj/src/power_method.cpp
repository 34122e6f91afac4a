#include "npm/power_method.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "npm/generate.hpp"
#include "npm/linalg.hpp"
#include "npm/metrics.hpp"
#include "trace_diag.hpp"

namespace npm {

NoiseModel NoiseModel::iid_gaussian(double stddev) {
    if (stddev < 0.0) throw ConfigError("noise stddev must be >= 0");
    NoiseModel m;
    m.kind = Kind::iid_gaussian;
    m.stddev = stddev;
    return m;
}

NoiseModel NoiseModel::with_callback(std::function<DenseMatrix(std::uint64_t, int)> fn) {
    if (!fn) throw ConfigError("noise callback must be set");
    NoiseModel m;
    m.kind = Kind::callback;
    m.generator = std::move(fn);
    return m;
}

namespace {

void validate_config(const RunConfig& cfg, int d) {
    if (cfg.k < 1 || cfg.k > cfg.q) throw ConfigError("run config requires 1 <= k <= q");
    if (cfg.q > cfg.p) throw ConfigError("run config requires q <= p");
    if (cfg.p > d) throw ConfigError("run config requires p <= d");
    if (cfg.iterations < 1) throw ConfigError("run config requires iterations >= 1");
}

void validate_symmetric(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw ConfigError("input matrix must be square");
    if (!a.all_finite()) throw ConfigError("input matrix must be finite");
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10)
                throw ConfigError("input matrix must be symmetric within 1e-10");
}

DenseMatrix make_noise(const NoiseModel& noise, const RunConfig& cfg, int d, int iteration,
                       const RandomSource& rng) {
    switch (noise.kind) {
        case NoiseModel::Kind::iid_gaussian:
            return gaussian_matrix(d, cfg.p, noise.stddev, rng,
                                   RandomSource::derive_stream(streams::kNoise, iteration));
        case NoiseModel::Kind::callback: {
            DenseMatrix g = noise.generator(cfg.seed, iteration);
            if (g.rows() != d || g.cols() != cfg.p)
                throw ConfigError("noise callback returned wrong shape");
            if (!g.all_finite()) throw ConfigError("noise callback returned non-finite entries");
            return g;
        }
        case NoiseModel::Kind::none:
            break;
    }
    throw ConfigError("make_noise called for noiseless model");
}

}  // namespace

PowerMethodResult noisy_power_method(const DenseMatrix& a, const RunConfig& cfg,
                                     const NoiseModel& noise, const EigenDecomposition* truth,
                                     const DenseMatrix* initial_x) {
    validate_symmetric(a);
    const int d = a.rows();
    validate_config(cfg, d);
    if (cfg.record_diagnostics && truth == nullptr)
        throw ConfigError("diagnostics require the planted truth");

    const RandomSource rng(cfg.seed);
    DenseMatrix x = initial_x != nullptr
                        ? *initial_x
                        : random_orthonormal(d, cfg.p, rng, streams::kInit);
    if (x.rows() != d || x.cols() != cfg.p)
        throw ConfigError("initial iterate has wrong shape");
    if (max_abs_diff(multiply_tn(x, x), DenseMatrix::identity(cfg.p)) > 1e-8)
        throw ConfigError("initial iterate must have orthonormal columns");

    PowerMethodResult out;
    std::optional<detail::DiagContext> diag;
    if (cfg.record_diagnostics) {
        diag.emplace(*truth, cfg.k, cfg.q, cfg.g_epsilon, cfg.g_constant);
        out.trace.records.push_back(diag->record(0, x, nullptr));
    }

    for (int ell = 1; ell <= cfg.iterations; ++ell) {
        const bool noisy = noise.kind != NoiseModel::Kind::none;
        DenseMatrix g;
        if (noisy) g = make_noise(noise, cfg, d, ell, rng);

        DenseMatrix y = multiply(a, x);
        if (noisy) y.add_scaled(g, 1.0);
        if (!y.all_finite())
            throw NumericalError("iterate became non-finite at iteration " + std::to_string(ell));

        QrResult qr = qr_factorize(y);
        x = std::move(qr.q);
        out.trace.rank_collapse = out.trace.rank_collapse || qr.rank_deficient;

        if (diag) out.trace.records.push_back(diag->record(ell, x, noisy ? &g : nullptr));
    }

    out.x = std::move(x);
    return out;
}

namespace {

// ceil with a one-ulp-scale nudge so values landing exactly on an integer
// do not spill over from rounding.
int stable_ceil(double v) {
    const double nudged = v - 1e-9 * std::max(1.0, std::abs(v));
    const double c = std::ceil(nudged);
    if (c < 1.0) return 1;
    return static_cast<int>(c);
}

void validate_budget_args(double epsilon, double tau) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0,1)");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
}

}  // namespace

double required_iterations_real(double sigma_k, double sigma_q1, double dim, double epsilon,
                                double tau) {
    validate_budget_args(epsilon, tau);
    if (!(sigma_k > sigma_q1))
        throw ConfigError("zero spectral gap: gap-dependent bound inapplicable");
    if (!(dim >= 1.0)) throw ConfigError("dimension must be >= 1");
    return sigma_k / (sigma_k - sigma_q1) * std::log(tau * dim / epsilon);
}

int required_iterations(double sigma_k, double sigma_q1, double dim, double epsilon, double tau) {
    return stable_ceil(required_iterations_real(sigma_k, sigma_q1, dim, epsilon, tau));
}

int required_iterations(const EigenDecomposition& truth, int k, int q, double epsilon,
                        double tau) {
    return required_iterations(truth.sigma(k), truth.sigma(q + 1),
                               static_cast<double>(truth.dim()), epsilon, tau);
}

int iterations_log_d(double sigma_k, double sigma_q1, double dim) {
    if (!(sigma_k > sigma_q1))
        throw ConfigError("zero spectral gap: gap-dependent bound inapplicable");
    if (!(dim >= 1.0)) throw ConfigError("dimension must be >= 1");
    return stable_ceil(sigma_k / (sigma_k - sigma_q1) * std::log(dim));
}

int iterations_log_d(const EigenDecomposition& truth, int k, int q) {
    return iterations_log_d(truth.sigma(k), truth.sigma(q + 1),
                            static_cast<double>(truth.dim()));
}

ToleranceBudget noise_tolerance(double sigma_k, double sigma_q, double sigma_q1, int q, int p,
                                double dim, double epsilon, double tau) {
    validate_budget_args(epsilon, tau);
    if (q < 1 || p < q) throw ConfigError("noise_tolerance requires 1 <= q <= p");
    if (!(sigma_k > sigma_q1))
        throw ConfigError("zero spectral gap: gap-dependent bound inapplicable");

    ToleranceBudget b;
    b.mode = ToleranceBudget::Mode::gap_dependent;
    b.epsilon = epsilon;
    b.tau = tau;
    const double gap = sigma_k - sigma_q1;
    b.bound_g2 = epsilon * gap;
    b.bound_uqg = epsilon * gap * (std::sqrt(static_cast<double>(p)) -
                                   std::sqrt(static_cast<double>(q - 1))) /
                  (tau * std::sqrt(dim));
    b.iterations = required_iterations(sigma_k, sigma_q1, dim, epsilon, tau);

    // admissibility of epsilon; log terms with non-positive argument impose
    // no constraint
    constexpr double inf = std::numeric_limits<double>::infinity();
    double cap = inf;
    if (sigma_k > 0.0) {
        const double ratio = sigma_q / sigma_k;
        const double log_sigma = sigma_q > 0.0 ? std::log(sigma_k / sigma_q) : inf;
        const double log_dim = std::log(tau * dim);
        const double term1 = log_sigma > 0.0 ? 1.0 / log_sigma : inf;
        const double term2 = log_dim > 0.0 ? 1.0 / log_dim : inf;
        cap = ratio * std::min(term1, term2);
    }
    b.epsilon_admissible = epsilon <= cap;
    return b;
}

ToleranceBudget noise_tolerance(const EigenDecomposition& truth, int k, int q, int p,
                                double epsilon, double tau) {
    return noise_tolerance(truth.sigma(k), truth.sigma(q), truth.sigma(q + 1), q, p,
                           static_cast<double>(truth.dim()), epsilon, tau);
}

ToleranceBudget gap_independent_tolerance(double sigma_k1, int k, int p, double dim,
                                          double epsilon, double tau) {
    validate_budget_args(epsilon, tau);
    if (k < 1 || p < k) throw ConfigError("gap_independent_tolerance requires 1 <= k <= p");
    if (sigma_k1 < 0.0) throw ConfigError("sigma_{k+1} must be >= 0");

    ToleranceBudget b;
    b.mode = ToleranceBudget::Mode::gap_independent;
    b.epsilon = epsilon;
    b.tau = tau;
    b.bound_g2 = epsilon * epsilon * sigma_k1;
    b.bound_uqg = epsilon * epsilon * sigma_k1 *
                  (std::sqrt(static_cast<double>(p)) - std::sqrt(static_cast<double>(k - 1))) /
                  (tau * std::sqrt(dim));
    b.iterations = stable_ceil(std::log(tau * dim / epsilon) / epsilon);
    return b;
}

ToleranceBudget gap_independent_tolerance(const EigenDecomposition& truth, int k, int p,
                                          double epsilon, double tau) {
    return gap_independent_tolerance(truth.sigma(k + 1), k, p,
                                     static_cast<double>(truth.dim()), epsilon, tau);
}

ComplianceReport check_noise_compliance(const IterationTrace& trace,
                                        const ToleranceBudget& budget) {
    ComplianceReport report;
    bool has_noise_records = false;
    for (const IterationRecord& r : trace.records) {
        if (r.iteration < 1) continue;
        has_noise_records = true;
        bool ok = r.noise_spectral <= budget.bound_g2;
        if (r.noise_projected)
            ok = ok && *r.noise_projected <= budget.bound_uqg;
        else
            report.projected_checked = false;
        report.compliant.push_back(ok);
        if (!ok && !report.first_violation) report.first_violation = r.iteration;
    }
    if (!has_noise_records)
        throw ConfigError("check_noise_compliance: trace lacks recorded noise norms");
    return report;
}

}  // namespace npm
