#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace permfield {

/// Deterministic splittable RNG. Stream k of seed s is statistically
/// independent of stream k' != k; sampling code never touches wall clock.
/// Distribution sampling is hand-rolled (inverse CDF) so that results are
/// reproducible independent of the standard library in use.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix(seed, stream)) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform on (0,1), never returning 0 or 1.
    double uniform() {
        const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
        return u;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double normal() {
        // Box-Muller; one value per call keeps the stream layout simple.
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Poisson by inversion for small mean, PTRS-free normal cutover for
    /// large mean is not needed at the means this project uses (< 50);
    /// the inversion loop is exact and fast at desk scale.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 50.0) {
            const double L = std::exp(-mean);
            std::uint64_t k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= uniform();
            } while (p > L);
            return k - 1;
        }
        // Split the mean; recursion depth is log2(mean/50).
        return poisson(mean / 2) + poisson(mean / 2);
    }

    /// Index in [0, n) with probability weights[i] / sum(weights).
    template <typename Vec>
    int discrete(const Vec& weights, int n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += weights[i];
        double target = uniform() * total;
        for (int i = 0; i < n; ++i) {
            target -= weights[i];
            if (target <= 0.0) return i;
        }
        return n - 1;
    }

  private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // SplitMix64 over (seed, stream) to decorrelate streams.
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace permfield
