#pragma once

#include <cstdint>
#include <string_view>

namespace recigraph {

// Deterministic 64-bit generator (splitmix64). Every reproducibility
// contract in this project assumes the same seed yields the same stream on
// every platform; std::uniform_*_distribution does not guarantee that, so
// all sampling goes through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n); n must be > 0. Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n);

    // Uniform in [0, 1), 53 bits of entropy.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller.
    double normal();

    // Derives an independent stream seed from two inputs.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

    // FNV-1a, used to fold node ids into per-seed stream keys.
    static std::uint64_t hash_string(std::string_view s);

private:
    std::uint64_t state_;
};

}  // namespace recigraph
