#pragma once

#include <cstdint>
#include <string_view>

namespace npm {

// Stream tags so independent consumers of one seed never collide.
namespace streams {
inline constexpr std::uint64_t kInit = 1;        // X_0 initialization
inline constexpr std::uint64_t kNoise = 2;       // per-iteration noise
inline constexpr std::uint64_t kBasis = 3;       // planted eigenbasis
inline constexpr std::uint64_t kSample = 4;      // stream samples
inline constexpr std::uint64_t kNode = 5;        // per-node noise
inline constexpr std::uint64_t kProjection = 6;  // round-check projections
inline constexpr std::uint64_t kSplit = 7;       // node weights for matrix splits
inline constexpr std::uint64_t kDefault = 0;
}  // namespace streams

/// Counter-based random source: every value is a pure function of
/// (seed, stream, index), so any element of any stream can be generated
/// independently and concurrently. The uniform stream is integer-exact and
/// identical on every platform; the Gaussian transform additionally relies
/// on libm log/cos/sqrt.
class RandomSource {
public:
    static constexpr std::string_view kAlgorithm = "ctr-mix64/box-muller-v1";

    explicit RandomSource(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Raw 64-bit word for (stream, index).
    std::uint64_t word(std::uint64_t stream, std::uint64_t index) const;

    /// Uniform double in the open interval (0, 1).
    double uniform(std::uint64_t stream, std::uint64_t index) const;

    /// Standard normal via Box-Muller; consumes words 2*index, 2*index+1.
    double gaussian(std::uint64_t stream, std::uint64_t index) const;

    /// Combine a stream tag with up to two substream keys.
    static std::uint64_t derive_stream(std::uint64_t tag, std::uint64_t a = 0,
                                       std::uint64_t b = 0);

private:
    std::uint64_t seed_;
};

}  // namespace npm
