#ifndef CROSSMAP_RNG_HPP
#define CROSSMAP_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace crossmap {

/**
 * Seeded random source with platform-stable draws.
 *
 * std::mt19937_64 is fully specified by the standard, but the std::*_distribution
 * adaptors are not, so the same seed can produce different streams on different
 * standard libraries. Every draw here is derived from raw engine output.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

    /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
    std::size_t below(std::size_t n);

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

    /// Child seed for an independent sub-stream (grid cell, fold, run...).
    std::uint64_t fork() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// Deterministic seed derivation: mixes a base seed with a stream tag (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace crossmap

#endif
