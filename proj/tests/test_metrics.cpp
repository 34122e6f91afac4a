#include <doctest.h>

#include <cmath>
#include <limits>

#include "npm/generate.hpp"
#include "npm/linalg.hpp"
#include "npm/metrics.hpp"
#include "oracles.hpp"

using npm::DenseMatrix;
using npm::NormKind;

namespace {

DenseMatrix planar(double phi) {
    return DenseMatrix::from_rows({{std::cos(phi)}, {std::sin(phi)}});
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("sin_theta is zero on containment") {
    const npm::RandomSource rng(31);
    DenseMatrix x = npm::random_orthonormal(10, 4, rng, 1);
    DenseMatrix u_k = x.columns(0, 2);
    CHECK(npm::sin_theta(u_k, x) <= 1e-12);
}

TEST_CASE("planar closed forms for sin and tan") {
    DenseMatrix e1 = DenseMatrix::from_rows({{1.0}, {0.0}});
    for (double phi : {0.3, 0.7, 1.2}) {
        DenseMatrix x = planar(phi);
        CHECK(npm::sin_theta(e1, x) == doctest::Approx(std::abs(std::sin(phi))).epsilon(1e-12));
        CHECK(npm::tan_theta(e1, x) == doctest::Approx(std::abs(std::tan(phi))).epsilon(1e-12));
    }
}

TEST_CASE("sin_theta matches the SVD principal-angle oracle") {
    const npm::RandomSource rng(32);
    DenseMatrix u_k = npm::random_orthonormal(30, 3, rng, 1);
    DenseMatrix x = npm::random_orthonormal(30, 6, rng, 2);
    const double lib = npm::sin_theta(u_k, x);
    // largest principal-angle sine = sqrt(1 - sigma_min(U_k^T X)^2)
    DenseMatrix w = oracle::matmul(oracle::transpose(u_k), x);
    std::vector<double> s = oracle::singular_values(w);
    const double ref = std::sqrt(std::max(0.0, 1.0 - s.back() * s.back()));
    CHECK(lib == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("tan_theta vanishes when spans agree and respects trig identities") {
    const npm::RandomSource rng(33);
    DenseMatrix u = npm::random_orthonormal(12, 4, rng, 1);
    CHECK(npm::tan_theta(u, u) <= 1e-10);

    DenseMatrix x = npm::random_orthonormal(12, 4, rng, 2);
    const double sin_v = npm::sin_theta(u, x);
    const double tan_v = npm::tan_theta(u, x);
    if (sin_v < 1.0 - 1e-12) {
        CHECK(tan_v == doctest::Approx(sin_v / std::sqrt(1.0 - sin_v * sin_v)).epsilon(1e-7));
    }
}

TEST_CASE("tan_theta flags rank-deficiency with +inf") {
    // X orthogonal to U: U^T X = 0
    DenseMatrix u = DenseMatrix::from_rows({{1.0}, {0.0}, {0.0}});
    DenseMatrix x = DenseMatrix::from_rows({{0.0}, {1.0}, {0.0}});
    CHECK(std::isinf(npm::tan_theta(u, x)));
}

TEST_CASE("rank_k_perturbation is zero on exact alignment") {
    const npm::RandomSource rng(34);
    DenseMatrix x = npm::random_orthonormal(14, 6, rng, 1);
    DenseMatrix u_q = x.columns(0, 4);
    CHECK(npm::rank_k_perturbation(u_q, x, 2) <= 1e-10);
}

TEST_CASE("rank_k_perturbation with k=q stays below tan_theta_q") {
    const npm::RandomSource rng(35);
    DenseMatrix u_q = npm::random_orthonormal(20, 4, rng, 1);
    DenseMatrix x = npm::random_orthonormal(20, 7, rng, 2);
    const double h = npm::rank_k_perturbation(u_q, x, 4);
    const double tan_q = npm::tan_theta(u_q, x);
    CHECK(h <= tan_q + 1e-10);
}

TEST_CASE("submatrix bound h <= tan_theta_q over random instances") {
    for (int trial = 0; trial < 20; ++trial) {
        const npm::RandomSource rng(3600 + trial);
        DenseMatrix u_q = npm::random_orthonormal(40, 4, rng, 1);
        DenseMatrix x = npm::random_orthonormal(40, 8, rng, 2);
        const double h = npm::rank_k_perturbation(u_q, x, 2);
        const double tan_q = npm::tan_theta(u_q, x);
        CHECK(h <= tan_q + 1e-10);
    }
}

TEST_CASE("cos_theta lower bound 1/(1+tan)") {
    for (int trial = 0; trial < 20; ++trial) {
        const npm::RandomSource rng(3700 + trial);
        DenseMatrix u_q = npm::random_orthonormal(25, 3, rng, 1);
        DenseMatrix x = npm::random_orthonormal(25, 6, rng, 2);
        const double cos_v = npm::cos_theta(u_q, x);
        const double tan_v = npm::tan_theta(u_q, x);
        if (std::isfinite(tan_v)) CHECK(cos_v >= 1.0 / (1.0 + tan_v) - 1e-10);
    }
}

TEST_CASE("angles are invariant under right-rotation of the iterate") {
    const npm::RandomSource rng(38);
    DenseMatrix u_k = npm::random_orthonormal(18, 2, rng, 1);
    DenseMatrix u_q = npm::random_orthonormal(18, 4, rng, 1);
    DenseMatrix x = npm::random_orthonormal(18, 5, rng, 2);
    DenseMatrix w = npm::random_orthonormal(5, 5, rng, 3);
    DenseMatrix xw = npm::multiply(x, w);

    CHECK(npm::sin_theta(u_k, xw) == doctest::Approx(npm::sin_theta(u_k, x)).epsilon(1e-10));
    CHECK(npm::tan_theta(u_q, xw) == doctest::Approx(npm::tan_theta(u_q, x)).epsilon(1e-10));
    CHECK(npm::cos_theta(u_q, xw) == doctest::Approx(npm::cos_theta(u_q, x)).epsilon(1e-10));
    CHECK(npm::rank_k_perturbation(u_q, xw, 2) ==
          doctest::Approx(npm::rank_k_perturbation(u_q, x, 2)).epsilon(1e-10));
}

TEST_CASE("small-h instances imply small tan_theta_k") {
    // instances built in the planted basis with h <= eps/4
    int checked = 0;
    for (double eps : {0.4, 0.2, 0.1}) {
        for (int trial = 0; trial < 30; ++trial) {
            const int d = 30, k = 2, q = 4, p = 8;
            const npm::RandomSource rng(3900 + trial);
            DenseMatrix u = npm::random_orthonormal(d, d, rng, 1);
            DenseMatrix u_k = u.columns(0, k);
            DenseMatrix u_q = u.columns(0, q);

            DenseMatrix y(d, p);
            for (int j = 0; j < q; ++j) y(j, j) = 1.0;  // top block [I_q | 0]
            double scale = eps / 4.0;
            for (int attempt = 0; attempt < 60; ++attempt) {
                for (int i = q; i < d; ++i)
                    for (int j = 0; j < p; ++j) {
                        const double noise = rng.gaussian(7, static_cast<std::uint64_t>(i) * p + j);
                        y(i, j) = (j < k ? scale : 0.7) * noise;
                    }
                DenseMatrix x = npm::qr_factorize(npm::multiply(u, y)).q;
                const double h = npm::rank_k_perturbation(u_q, x, k);
                if (h <= eps / 4.0) {
                    CHECK(npm::tan_theta(u_k, x) <= eps);
                    ++checked;
                    break;
                }
                scale *= 0.5;
            }
        }
    }
    CHECK(checked == 90);
}

TEST_CASE("angle_report matches the individual diagnostics and trig identities") {
    const npm::RandomSource rng(39);
    DenseMatrix u = npm::random_orthonormal(22, 5, rng, 1);
    DenseMatrix u_k = u.columns(0, 2);
    DenseMatrix u_q = u.columns(0, 5);
    DenseMatrix x = npm::random_orthonormal(22, 6, rng, 2);

    npm::AngleReport report = npm::angle_report(u_k, u_q, x);
    CHECK(report.sin_theta_k == doctest::Approx(npm::sin_theta(u_k, x)).epsilon(1e-12));
    CHECK(report.tan_theta_k == doctest::Approx(npm::tan_theta(u_k, x)).epsilon(1e-12));
    CHECK(report.tan_theta_q == doctest::Approx(npm::tan_theta(u_q, x)).epsilon(1e-12));
    CHECK(report.cos_theta_q == doctest::Approx(npm::cos_theta(u_q, x)).epsilon(1e-12));
    CHECK(report.h == doctest::Approx(npm::rank_k_perturbation(u_q, x, 2)).epsilon(1e-12));

    CHECK(report.sin_theta_k >= 0.0);
    CHECK(report.sin_theta_k <= 1.0);
    CHECK(report.cos_theta_q >= 0.0);
    CHECK(report.cos_theta_q <= 1.0);
    if (std::isfinite(report.tan_theta_k)) {
        const double from_tan =
            report.tan_theta_k / std::sqrt(1.0 + report.tan_theta_k * report.tan_theta_k);
        CHECK(report.sin_theta_k == doctest::Approx(from_tan).epsilon(1e-8));
    }
}

TEST_CASE("approx_error_ratio closed forms") {
    // optimality at X = U_k (p = k)
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(10, 2.0), npm::RandomSource(40));
    DenseMatrix u_k = planted.truth.leading_vectors(3);
    npm::ErrorRatio at_opt =
        npm::approx_error_ratio(planted.a, planted.truth, u_k, 3, NormKind::spectral);
    CHECK(at_opt.is_ratio);
    CHECK(at_opt.value == doctest::Approx(1.0).epsilon(1e-8));

    // worst-case alignment: spectrum (4,2,1), k=1, X = u_2 -> ratio 2
    npm::PlantedPsd worst = npm::synth_psd(
        npm::SpectrumSpec::explicit_values({4.0, 2.0, 1.0}), npm::RandomSource(41));
    DenseMatrix u2 = worst.truth.vectors.columns(1, 1);
    npm::ErrorRatio ratio =
        npm::approx_error_ratio(worst.a, worst.truth, u2, 1, NormKind::spectral);
    CHECK(ratio.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("approx_error_ratio is at least 1 for rank-k iterates") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(12, 2.0), npm::RandomSource(42));
    for (int trial = 0; trial < 10; ++trial) {
        DenseMatrix x = npm::random_orthonormal(12, 3, npm::RandomSource(4300 + trial), 1);
        for (NormKind kind : {NormKind::spectral, NormKind::frobenius}) {
            npm::ErrorRatio r = npm::approx_error_ratio(planted.a, planted.truth, x, 3, kind);
            CHECK(r.is_ratio);
            CHECK(r.value >= 1.0 - 1e-8);
        }
    }
}

TEST_CASE("zero optimum falls back to the flagged absolute error") {
    npm::PlantedPsd planted = npm::synth_psd(
        npm::SpectrumSpec::explicit_values({2.0, 1.0, 0.0, 0.0}), npm::RandomSource(44));
    DenseMatrix x = npm::random_orthonormal(4, 2, npm::RandomSource(45), 1);
    npm::ErrorRatio r = npm::approx_error_ratio(planted.a, planted.truth, x, 2, NormKind::spectral);
    CHECK_FALSE(r.is_ratio);
    CHECK(r.value >= 0.0);
}

TEST_CASE("truth-only error ratio agrees with the matrix route") {
    npm::PlantedPsd planted =
        npm::synth_psd(npm::SpectrumSpec::power_law(25, 2.0), npm::RandomSource(46));
    for (int trial = 0; trial < 6; ++trial) {
        DenseMatrix x = npm::random_orthonormal(25, 5, npm::RandomSource(4700 + trial), 1);
        for (NormKind kind : {NormKind::spectral, NormKind::frobenius}) {
            const double direct =
                npm::approx_error_ratio(planted.a, planted.truth, x, 3, kind).value;
            const double structured =
                npm::approx_error_ratio_from_truth(planted.truth, x, 3, kind).value;
            CHECK(structured == doctest::Approx(direct).epsilon(1e-6));
        }
    }
}

TEST_CASE("non-orthonormal inputs are rejected") {
    DenseMatrix skew = DenseMatrix::from_rows({{1.0}, {1.0}});
    DenseMatrix x = DenseMatrix::from_rows({{1.0}, {0.0}});
    CHECK_THROWS_AS(npm::sin_theta(skew, x), npm::ConfigError);
    CHECK_THROWS_AS(npm::tan_theta(skew, x), npm::ConfigError);
}

}  // TEST_SUITE
