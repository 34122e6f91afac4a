// Compares the serial reference kernels against the OpenMP kernels and
// verifies the results agree bit-for-bit.

#include <cstdio>
#include <vector>

#include <omp.h>

#include "npm/generate.hpp"
#include "npm/kernels.hpp"
#include "npm/linalg.hpp"
#include "npm/random.hpp"

namespace {

double time_of(int repeats, const auto& fn) {
    fn();  // warm-up
    const double t0 = omp_get_wtime();
    for (int r = 0; r < repeats; ++r) fn();
    return (omp_get_wtime() - t0) / repeats;
}

void bench_matmul(int d, int p, const npm::RandomSource& rng) {
    npm::DenseMatrix a = npm::gaussian_matrix(d, d, 1.0, rng, 1);
    npm::DenseMatrix x = npm::gaussian_matrix(d, p, 1.0, rng, 2);
    npm::DenseMatrix serial_out(d, p), omp_out(d, p);

    const int repeats = d <= 256 ? 20 : 5;
    const double t_serial = time_of(repeats, [&] {
        npm::serial::matmul(a.data(), d, d, x.data(), p, serial_out.data());
    });
    npm::kernels::set_backend(npm::kernels::Backend::openmp);
    const double t_omp = time_of(repeats, [&] {
        npm::kernels::matmul(a.data(), d, d, x.data(), p, omp_out.data());
    });

    const bool same = npm::max_abs_diff(serial_out, omp_out) == 0.0;
    std::printf("matmul   %4dx%-4d * %4dx%-4d  serial %8.3f ms  openmp %8.3f ms  x%.2f  %s\n", d,
                d, d, p, 1e3 * t_serial, 1e3 * t_omp, t_serial / t_omp,
                same ? "bit-equal" : "MISMATCH");
}

void bench_qr(int d, int p, const npm::RandomSource& rng) {
    npm::DenseMatrix m = npm::gaussian_matrix(d, p, 1.0, rng, 3);

    npm::kernels::set_backend(npm::kernels::Backend::serial);
    const int repeats = 10;
    npm::QrResult serial_qr;
    const double t_serial = time_of(repeats, [&] { serial_qr = npm::qr_factorize(m); });
    npm::kernels::set_backend(npm::kernels::Backend::openmp);
    npm::QrResult omp_qr;
    const double t_omp = time_of(repeats, [&] { omp_qr = npm::qr_factorize(m); });

    const bool same = npm::max_abs_diff(serial_qr.q, omp_qr.q) == 0.0 &&
                      npm::max_abs_diff(serial_qr.r, omp_qr.r) == 0.0;
    std::printf("qr       %4dx%-4d              serial %8.3f ms  openmp %8.3f ms  x%.2f  %s\n", d,
                p, 1e3 * t_serial, 1e3 * t_omp, t_serial / t_omp,
                same ? "bit-equal" : "MISMATCH");
}

void bench_stream_block(int d, int p, int samples, const npm::RandomSource& rng) {
    npm::DenseMatrix x = npm::random_orthonormal(d, p, rng, 4);
    std::vector<std::vector<double>> zs;
    for (int i = 0; i < samples; ++i) {
        std::vector<double> z(d);
        for (int c = 0; c < d; ++c) z[c] = rng.gaussian(5, static_cast<std::uint64_t>(i) * d + c);
        zs.push_back(std::move(z));
    }

    auto block = [&](auto&& matvec, auto&& rank1, npm::DenseMatrix& y) {
        std::vector<double> w(p);
        for (const auto& z : zs) {
            matvec(x.data(), d, p, z.data(), w.data());
            rank1(y.data(), d, p, z.data(), w.data());
        }
    };

    npm::DenseMatrix y_serial(d, p), y_omp(d, p);
    const double t_serial = time_of(5, [&] {
        y_serial = npm::DenseMatrix(d, p);
        block(npm::serial::matvec_tn, npm::serial::rank1_update, y_serial);
    });
    npm::kernels::set_backend(npm::kernels::Backend::openmp);
    const double t_omp = time_of(5, [&] {
        y_omp = npm::DenseMatrix(d, p);
        block(npm::kernels::matvec_tn, npm::kernels::rank1_update, y_omp);
    });

    const bool same = npm::max_abs_diff(y_serial, y_omp) == 0.0;
    std::printf("stream   %4dx%-4d %6d samples serial %8.3f ms  openmp %8.3f ms  x%.2f  %s\n", d,
                p, samples, 1e3 * t_serial, 1e3 * t_omp, t_serial / t_omp,
                same ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    const npm::RandomSource rng(2024);
    for (int d : {128, 256, 512}) bench_matmul(d, 32, rng);
    bench_qr(512, 96, rng);   // below the dispatch threshold: serial fallback
    bench_qr(2048, 64, rng);  // above it: parallel reflector updates
    bench_stream_block(512, 64, 500, rng);
    bench_stream_block(2048, 64, 500, rng);
    return 0;
}
