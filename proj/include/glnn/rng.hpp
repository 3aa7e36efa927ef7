#pragma once

#include <cstdint>
#include <random>

namespace glnn {

// Seeded generator with portable draw helpers. std::*_distribution is
// implementation-defined, so uniform draws are built directly on the
// mt19937_64 output to keep corpora and graphs reproducible across builds.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t raw() { return engine_(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_u64(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniform_u64(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Uniform real in [0, 1).
    double uniform_real() { return (engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform_real() < p; }

    /// Independent stream derived from (seed, tag); tags keep e.g. the
    /// train and validation draws of one corpus decoupled.
    static Rng stream(std::uint64_t seed, std::uint64_t tag) {
        return Rng(splitmix(seed ^ splitmix(tag)));
    }

  private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace glnn
