#pragma once

#include <cstdint>
#include <random>

namespace pbd {

// All randomness in the library flows through these helpers so that runs are
// reproducible from a single 64-bit seed across platforms.  mt19937_64 output
// is pinned by the standard; we never use std::*_distribution (their mappings
// are implementation-defined).

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive an independent sub-seed for stream `stream_id` of a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream_id) {
    std::uint64_t s = root ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) without modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    bool next_bernoulli(double p) { return next_double() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pbd
