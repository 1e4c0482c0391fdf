// rng.hpp - seeded random streams and seed derivation
//
// Streams are std::mt19937_64 engines. Uniform doubles are formed from the top
// 53 bits of each engine output, so a given seed produces the same values on
// every standard library (std::uniform_real_distribution is not portable).
//
// Child seeds are derived from a master seed by folding a path of 64-bit words
// through the SplitMix64 finalizer. The path names a run by its content
// (stream tag, N, axis, beta, Gamma, replica index, ...), never by its position
// in a sweep, so reordering a grid leaves every individual seed unchanged.

#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dtc {

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t word : path) s = splitmix64(s ^ splitmix64(word));
    return s;
}

inline std::uint64_t seed_word(double value) { return std::bit_cast<std::uint64_t>(value); }

// Stream tags used in seed paths.
enum class SeedStream : std::uint64_t {
    disorder_fields = 0x68,     // 'h'
    disorder_couplings = 0x4a,  // 'J'
    measurement = 0x6d,         // 'm'
    disorder = 0x64,            // 'd'
};

constexpr std::uint64_t seed_word(SeedStream s) { return static_cast<std::uint64_t>(s); }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace dtc
