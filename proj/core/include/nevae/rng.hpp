#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nevae {

// Deterministic random stream. mt19937_64 is fully specified by the standard;
// the uniform/normal transforms are implemented here rather than with
// std::*_distribution (whose algorithms are implementation-defined), so the
// same seed yields the same bytes on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
    double normal();

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    std::vector<double> normal_vector(std::size_t n);
    std::vector<double> uniform_vector(std::size_t n, double lo, double hi);

    // Fisher-Yates.
    void shuffle(std::vector<std::size_t>& v);

    // Decorrelated child stream for per-trial / per-epoch seeding.
    Rng split(std::uint64_t stream_id);

private:
    std::mt19937_64 engine_;
};

// SplitMix64 step; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace nevae
