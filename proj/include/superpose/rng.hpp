#pragma once

#include <cstdint>
#include <random>

namespace superpose {

/// Seedable, splittable generator. Streams derived with `split` are
/// independent of how many values the parent has produced, so Monte-Carlo
/// trials keyed by index give the same draws for any thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL))); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson draw by inversion of the CDF, one uniform per call.
    std::uint32_t poisson(double mean);

    std::uint64_t seed() const noexcept { return seed_; }

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Smallest n with P(N <= n) >= u for N ~ Poisson(mean).
std::uint32_t poisson_quantile(double mean, double u);

/// Smallest n whose Poisson upper tail P(N > n) is at most `tail`.
std::uint32_t poisson_tail_cap(double mean, double tail);

}  // namespace superpose
