#include "npm/random.hpp"

#include <cmath>
#include <numbers>

namespace npm {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

constexpr std::uint64_t kStreamMul = 0xa24baed4963ee407ULL;
constexpr std::uint64_t kIndexMul = 0x9fb21c651e98df25ULL;
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t RandomSource::word(std::uint64_t stream, std::uint64_t index) const {
    std::uint64_t z = mix64(seed_ ^ (stream * kStreamMul) ^ kGolden);
    z = mix64(z ^ (index * kIndexMul));
    return z;
}

double RandomSource::uniform(std::uint64_t stream, std::uint64_t index) const {
    // 53 high bits, centered: strictly inside (0, 1)
    return (static_cast<double>(word(stream, index) >> 11) + 0.5) * 0x1.0p-53;
}

double RandomSource::gaussian(std::uint64_t stream, std::uint64_t index) const {
    const double u1 = uniform(stream, 2 * index);
    const double u2 = uniform(stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomSource::derive_stream(std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = mix64(tag * kGolden + 1);
    z = mix64(z ^ (a * kStreamMul));
    z = mix64(z ^ (b * kIndexMul));
    return z;
}

}  // namespace npm
