#include <doctest.h>

#include <cmath>
#include <vector>

#include "npm/generate.hpp"
#include "npm/linalg.hpp"
#include "npm/metrics.hpp"
#include "npm/power_method.hpp"
#include "oracles.hpp"

using npm::DenseMatrix;
using npm::NoiseModel;
using npm::RunConfig;

namespace {

npm::EigenDecomposition diag_truth(std::vector<double> values) {
    npm::EigenDecomposition t;
    t.vectors = DenseMatrix::identity(static_cast<int>(values.size()));
    t.values = std::move(values);
    return t;
}

// stddev so that E||G||_2 is close to `target` for a d x p iid Gaussian
double stddev_for_spectral_target(double target, int d, int p) {
    return target / (std::sqrt(static_cast<double>(d)) + std::sqrt(static_cast<double>(p)));
}

}  // namespace

TEST_SUITE("power_method") {

TEST_CASE("two-eigenvalue closed form contracts at sigma2/sigma1 per step") {
    DenseMatrix a = DenseMatrix::from_rows(
        {{4.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 1.0}});
    npm::EigenDecomposition truth = diag_truth({4.0, 2.0, 1.0});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    DenseMatrix x0 = DenseMatrix::from_rows({{inv_sqrt2}, {inv_sqrt2}, {0.0}});

    RunConfig cfg;
    cfg.k = cfg.q = cfg.p = 1;
    cfg.iterations = 10;
    cfg.record_diagnostics = true;
    npm::PowerMethodResult res = npm::noisy_power_method(a, cfg, NoiseModel::none(), &truth, &x0);

    REQUIRE(res.trace.records.size() == 11);
    CHECK(*res.trace.records[0].tan_theta_k == doctest::Approx(1.0).epsilon(1e-12));
    for (int ell = 1; ell <= 10; ++ell) {
        CHECK(*res.trace.records[ell].tan_theta_k ==
              doctest::Approx(std::pow(0.5, ell)).epsilon(1e-10));
    }
}

TEST_CASE("an invariant subspace stays put") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(12, 2.0), npm::RandomSource(50));
    DenseMatrix u_p = planted.truth.leading_vectors(4);
    RunConfig cfg;
    cfg.k = 2;
    cfg.q = 3;
    cfg.p = 4;
    cfg.iterations = 6;
    cfg.record_diagnostics = true;
    npm::PowerMethodResult res =
        npm::noisy_power_method(planted.a, cfg, NoiseModel::none(), &planted.truth, &u_p);
    for (const npm::IterationRecord& r : res.trace.records) CHECK(*r.sin_theta_k <= 1e-8);
}

TEST_CASE("output columns are orthonormal and the trace has L+1 records") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(20, 2.0), npm::RandomSource(51));
    RunConfig cfg;
    cfg.k = 2;
    cfg.q = 4;
    cfg.p = 6;
    cfg.iterations = 5;
    cfg.seed = 3;
    cfg.record_diagnostics = true;
    npm::PowerMethodResult res =
        npm::noisy_power_method(planted.a, cfg, NoiseModel::iid_gaussian(1e-3), &planted.truth);

    REQUIRE(res.trace.records.size() == 6);
    DenseMatrix gram = oracle::matmul(oracle::transpose(res.x), res.x);
    gram.add_scaled(DenseMatrix::identity(6), -1.0);
    CHECK(oracle::frobenius(gram) <= 1e-9);
    for (const npm::IterationRecord& r : res.trace.records) {
        CHECK(r.noise_spectral >= 0.0);
        CHECK(*r.noise_projected >= 0.0);
        CHECK(*r.sin_theta_k >= 0.0);
    }
}

TEST_CASE("noiseless tangent contraction by sigma_{q+1}/sigma_q per step") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(18, 2.0), npm::RandomSource(52));
    RunConfig cfg;
    cfg.k = 2;
    cfg.q = 3;
    cfg.p = 5;
    cfg.iterations = 8;
    cfg.seed = 4;
    cfg.record_diagnostics = true;
    npm::PowerMethodResult res =
        npm::noisy_power_method(planted.a, cfg, NoiseModel::none(), &planted.truth);

    const double rate = planted.truth.sigma(cfg.q + 1) / planted.truth.sigma(cfg.q);
    for (std::size_t i = 1; i < res.trace.records.size(); ++i) {
        const double prev = *res.trace.records[i - 1].tan_theta_q;
        const double cur = *res.trace.records[i].tan_theta_q;
        if (std::isfinite(prev)) CHECK(cur <= rate * prev + 1e-8);
    }
}

TEST_CASE("noiseless sin_theta_k is non-increasing after one burn-in step") {
    for (int seed = 0; seed < 10; ++seed) {
        npm::PlantedPsd planted =
            npm::synth_psd(npm::SpectrumSpec::power_law(15, 2.0), npm::RandomSource(53));
        RunConfig cfg;
        cfg.k = 2;
        cfg.q = 3;
        cfg.p = 4;
        cfg.iterations = 7;
        cfg.seed = 530 + seed;
        cfg.record_diagnostics = true;
        npm::PowerMethodResult res =
            npm::noisy_power_method(planted.a, cfg, NoiseModel::none(), &planted.truth);
        for (std::size_t i = 2; i < res.trace.records.size(); ++i) {
            CHECK(*res.trace.records[i].sin_theta_k <=
                  *res.trace.records[i - 1].sin_theta_k + 1e-10);
        }
    }
}

TEST_CASE("the angle trace is invariant under rotation of the start") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(14, 2.0), npm::RandomSource(54));
    const npm::RandomSource rng(55);
    DenseMatrix x0 = npm::random_orthonormal(14, 4, rng, 1);
    DenseMatrix w = npm::random_orthonormal(4, 4, rng, 2);
    DenseMatrix x0w = npm::multiply(x0, w);

    RunConfig cfg;
    cfg.k = 2;
    cfg.q = 2;
    cfg.p = 4;
    cfg.iterations = 6;
    cfg.record_diagnostics = true;
    npm::PowerMethodResult r1 =
        npm::noisy_power_method(planted.a, cfg, NoiseModel::none(), &planted.truth, &x0);
    npm::PowerMethodResult r2 =
        npm::noisy_power_method(planted.a, cfg, NoiseModel::none(), &planted.truth, &x0w);
    for (std::size_t i = 0; i < r1.trace.records.size(); ++i)
        CHECK(*r1.trace.records[i].sin_theta_k ==
              doctest::Approx(*r2.trace.records[i].sin_theta_k).epsilon(1e-8));
}

TEST_CASE("rank collapse is flagged and the run keeps going") {
    DenseMatrix a = DenseMatrix::from_rows(
        {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}});
    RunConfig cfg;
    cfg.k = 1;
    cfg.q = 1;
    cfg.p = 2;
    cfg.iterations = 2;
    cfg.seed = 9;
    npm::PowerMethodResult res = npm::noisy_power_method(a, cfg, NoiseModel::none());
    CHECK(res.trace.rank_collapse);
    DenseMatrix gram = oracle::matmul(oracle::transpose(res.x), res.x);
    gram.add_scaled(DenseMatrix::identity(2), -1.0);
    CHECK(oracle::frobenius(gram) <= 1e-9);
}

TEST_CASE("callback noise is validated and reproducible") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(10, 2.0), npm::RandomSource(56));
    NoiseModel cb = NoiseModel::with_callback([](std::uint64_t seed, int ell) {
        return npm::gaussian_matrix(10, 3, 1e-3, npm::RandomSource(seed),
                                    npm::RandomSource::derive_stream(99, ell));
    });
    RunConfig cfg;
    cfg.k = 1;
    cfg.q = 2;
    cfg.p = 3;
    cfg.iterations = 4;
    cfg.seed = 77;
    npm::PowerMethodResult a = npm::noisy_power_method(planted.a, cfg, cb);
    npm::PowerMethodResult b = npm::noisy_power_method(planted.a, cfg, cb);
    CHECK(npm::max_abs_diff(a.x, b.x) == 0.0);

    NoiseModel bad = NoiseModel::with_callback(
        [](std::uint64_t, int) { return DenseMatrix(2, 2); });
    CHECK_THROWS_AS(npm::noisy_power_method(planted.a, cfg, bad), npm::ConfigError);
}

TEST_CASE("config validation names the constraint") {
    DenseMatrix a = DenseMatrix::identity(4);
    RunConfig cfg;
    cfg.k = 3;
    cfg.q = 2;
    cfg.p = 2;
    cfg.iterations = 1;
    CHECK_THROWS_AS(npm::noisy_power_method(a, cfg, NoiseModel::none()), npm::ConfigError);
}

TEST_CASE("required_iterations closed forms") {
    const double e = std::exp(1.0);
    CHECK(npm::required_iterations(1.0, 0.0, e, 1.0 / e, 1.0) == 2);

    // doubling tau*d/eps adds exactly (sigma_k/gap)*ln 2 before the ceiling
    const double base = npm::required_iterations_real(1.0, 0.5, 100.0, 0.1, 1.0);
    const double doubled = npm::required_iterations_real(1.0, 0.5, 200.0, 0.1, 1.0);
    CHECK(doubled - base == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(npm::required_iterations(1.0, 1.0, 10.0, 0.1, 1.0), npm::ConfigError);
}

TEST_CASE("iteration-count ratio between q=k and q=2k grows with k") {
    npm::SpectrumSpec spec = npm::SpectrumSpec::power_law(40, 2.0);
    auto truth = diag_truth(spec.values());
    double prev_ratio = 0.0;
    for (int k : {2, 4, 8}) {
        const double lk =
            npm::required_iterations_real(truth.sigma(k), truth.sigma(k + 1), 40, 0.1, 1.0);
        const double l2k =
            npm::required_iterations_real(truth.sigma(k), truth.sigma(2 * k + 1), 40, 0.1, 1.0);
        const double ratio = lk / l2k;
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
    }
    CHECK(prev_ratio > 2.0);  // k=8 ratio is well above constant
}

TEST_CASE("gap-dependent budget closed forms") {
    // p = q makes the projected bound much smaller than the spectral bound
    npm::ToleranceBudget tight = npm::noise_tolerance(2.0, 1.5, 1.0, 4, 4, 100.0, 0.1, 1.0);
    CHECK(tight.bound_g2 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(tight.bound_uqg < tight.bound_g2);

    // rank-k truth: sigma_{q+1} = 0
    npm::ToleranceBudget rank_k = npm::noise_tolerance(2.0, 2.0, 0.0, 2, 4, 50.0, 0.1, 1.0);
    CHECK(rank_k.bound_g2 == doctest::Approx(0.1 * 2.0).epsilon(1e-12));
}

TEST_CASE("budget ratio between q=2k and the consecutive-gap comparator grows with k") {
    npm::SpectrumSpec spec = npm::SpectrumSpec::power_law(40, 2.0);
    auto truth = diag_truth(spec.values());
    double prev = 0.0;
    for (int k : {2, 4, 8, 16}) {
        npm::ToleranceBudget wide = npm::noise_tolerance(truth, k, 2 * k, 2 * k + 2, 0.1, 1.0);
        npm::ToleranceBudget consecutive = npm::noise_tolerance(truth, k, k, k + 2, 0.1, 1.0);
        const double ratio = wide.bound_g2 / consecutive.bound_g2;
        CHECK(ratio > prev);
        prev = ratio;
    }
    CHECK(prev > 5.0);  // roughly linear growth reaches well past k=2 level
}

TEST_CASE("admissibility warning flag") {
    // sigma_q << sigma_k forces a tiny admissible epsilon
    npm::ToleranceBudget b = npm::noise_tolerance(1.0, 0.01, 0.005, 2, 4, 100.0, 0.5, 1.0);
    CHECK_FALSE(b.epsilon_admissible);
    npm::ToleranceBudget ok = npm::noise_tolerance(1.0, 0.9, 0.5, 2, 4, 100.0, 0.05, 1.0);
    CHECK(ok.epsilon_admissible);
}

TEST_CASE("gap-independent budget closed forms") {
    npm::ToleranceBudget zero = npm::gap_independent_tolerance(0.0, 2, 4, 60.0, 0.25, 1.0);
    CHECK(zero.bound_g2 == 0.0);
    CHECK(zero.bound_uqg == 0.0);

    npm::ToleranceBudget full = npm::gap_independent_tolerance(0.5, 2, 4, 60.0, 0.2, 1.0);
    npm::ToleranceBudget half = npm::gap_independent_tolerance(0.5, 2, 4, 60.0, 0.1, 1.0);
    CHECK(half.bound_g2 == doctest::Approx(full.bound_g2 / 4.0).epsilon(1e-12));
    const int expected_l = static_cast<int>(std::ceil(std::log(60.0 / 0.2) / 0.2 - 1e-9));
    CHECK(full.iterations == expected_l);
}

TEST_CASE("noise compliance reports") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(16, 2.0), npm::RandomSource(57));
    RunConfig cfg;
    cfg.k = 2;
    cfg.q = 4;
    cfg.p = 6;
    cfg.iterations = 5;
    cfg.seed = 20;
    cfg.record_diagnostics = true;
    npm::ToleranceBudget budget = npm::noise_tolerance(planted.truth, 2, 4, 6, 0.2, 1.0);

    npm::PowerMethodResult clean =
        npm::noisy_power_method(planted.a, cfg, NoiseModel::none(), &planted.truth);
    npm::ComplianceReport report = npm::check_noise_compliance(clean.trace, budget);
    CHECK_FALSE(report.first_violation.has_value());
    for (bool ok : report.compliant) CHECK(ok);

    // single synthetic violation at iteration 3
    npm::IterationTrace tampered = clean.trace;
    tampered.records[3].noise_spectral = budget.bound_g2 * 10.0;
    npm::ComplianceReport tampered_report = npm::check_noise_compliance(tampered, budget);
    REQUIRE(tampered_report.first_violation.has_value());
    CHECK(*tampered_report.first_violation == 3);

    // noise far above budget violates essentially every iteration
    int violating_runs = 0;
    for (int seed = 0; seed < 20; ++seed) {
        cfg.seed = 5800 + seed;
        const double stddev = stddev_for_spectral_target(budget.bound_g2 * 10.0, 16, 6);
        npm::PowerMethodResult loud = npm::noisy_power_method(
            planted.a, cfg, NoiseModel::iid_gaussian(stddev), &planted.truth);
        npm::ComplianceReport r = npm::check_noise_compliance(loud.trace, budget);
        if (r.first_violation.has_value()) ++violating_runs;
    }
    CHECK(violating_runs == 20);

    npm::IterationTrace empty;
    CHECK_THROWS_AS(npm::check_noise_compliance(empty, budget), npm::ConfigError);
}

TEST_CASE("g sequence: max(g,0) decays in most seeded noisy runs") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(60, 2.0), npm::RandomSource(59));
    const double eps = 0.2;
    npm::ToleranceBudget budget = npm::noise_tolerance(planted.truth, 3, 6, 12, eps, 1.0);
    const double stddev = stddev_for_spectral_target(0.1 * budget.bound_g2, 60, 12);

    int monotone = 0;
    const int runs = 50;
    for (int seed = 0; seed < runs; ++seed) {
        RunConfig cfg;
        cfg.k = 3;
        cfg.q = 6;
        cfg.p = 12;
        cfg.iterations = npm::required_iterations(planted.truth, 3, 6, eps, 1.0);
        cfg.seed = 6000 + seed;
        cfg.record_diagnostics = true;
        cfg.g_epsilon = eps;
        npm::PowerMethodResult res = npm::noisy_power_method(
            planted.a, cfg, NoiseModel::iid_gaussian(stddev), &planted.truth);
        bool ok = true;
        for (std::size_t i = 1; i < res.trace.records.size(); ++i) {
            const double prev = std::max(*res.trace.records[i - 1].g, 0.0);
            const double cur = std::max(*res.trace.records[i].g, 0.0);
            if (cur > 1.05 * prev + 1e-12) ok = false;
        }
        if (ok) ++monotone;
    }
    CHECK(monotone >= 45);
}

TEST_CASE("noisy runs within a tenth of the budget converge for most seeds") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(60, 2.0), npm::RandomSource(60));
    const double eps = 0.2;
    npm::ToleranceBudget budget = npm::noise_tolerance(planted.truth, 3, 6, 12, eps, 1.0);
    const double stddev = stddev_for_spectral_target(0.1 * budget.bound_g2, 60, 12);
    const int iterations = npm::required_iterations(planted.truth, 3, 6, eps, 1.0);

    int hits = 0;
    for (int seed = 0; seed < 10; ++seed) {
        RunConfig cfg;
        cfg.k = 3;
        cfg.q = 6;
        cfg.p = 12;
        cfg.iterations = iterations;
        cfg.seed = 6100 + seed;
        cfg.record_diagnostics = true;
        npm::PowerMethodResult res = npm::noisy_power_method(
            planted.a, cfg, NoiseModel::iid_gaussian(stddev), &planted.truth);
        if (*res.trace.records.back().sin_theta_k <= eps) ++hits;
    }
    CHECK(hits >= 8);
}

}  // TEST_SUITE
