#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace nde {

/// Deterministic 64-bit generator (splitmix64 state advance feeding a
/// xoshiro-style mix). Self-contained so that streams are reproducible
/// across standard libraries and platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; two uniforms per draw, no cached state.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Child stream keyed by (a, b); independent of draws made on the parent.
    Rng derive(std::uint64_t a, std::uint64_t b = 0) const {
        Rng child(state_ ^ (0x8c2f7d5a1e3b9c47ULL * (a + 1)) ^ (0xd1342543de82ef95ULL * (b + 1)));
        child.next_u64();
        return child;
    }

  private:
    std::uint64_t state_;
};

}  // namespace nde
