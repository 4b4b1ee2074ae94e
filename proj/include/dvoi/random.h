#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dvoi {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent, order-free stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive a stream seed from a base seed and a path of integer keys, e.g.
/// derive_seed(seed, {stream::eval, sample_index}). Every (base, path) pair maps
/// to its own stream, so work can be scheduled in any order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(base);
    for (auto k : path) {
        h = mix64(h ^ mix64(k + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    return Rng{derive_seed(base, path)};
}

/// Stream identifiers used by the pipeline.
namespace stream {
inline constexpr std::uint64_t prior_sp = 1;
inline constexpr std::uint64_t evaluation = 2;
inline constexpr std::uint64_t measurement = 3;
inline constexpr std::uint64_t posterior_sp = 4;
inline constexpr std::uint64_t evpi = 5;
inline constexpr std::uint64_t evpi_eval = 6;
inline constexpr std::uint64_t dataset = 7;
inline constexpr std::uint64_t solar = 8;
inline constexpr std::uint64_t tariff = 9;
inline constexpr std::uint64_t baseline = 10;
} // namespace stream

/// Uniform index in [0, n).
inline std::size_t uniform_index(Rng &rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>{0, n - 1}(rng);
}

inline double uniform01(Rng &rng) { return std::uniform_real_distribution<double>{0.0, 1.0}(rng); }

} // namespace dvoi
