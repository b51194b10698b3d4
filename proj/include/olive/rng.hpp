#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "olive/common.hpp"

namespace olive {

// Deterministic PRNG with explicit draw routines. <random> distributions are
// not used because their output is implementation-defined; trace generation
// must be byte-identical for a given seed on any toolchain.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // splitmix64
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0,n)
    uint64_t below(uint64_t n) {
        invariant(n > 0, "Rng::below: n must be positive");
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Box-Muller with caching
    double normal(double mean, double stddev) {
        if (has_cached_) {
            has_cached_ = false;
            return mean + stddev * cached_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return mean + stddev * r * std::cos(a);
    }

    double exponential(double mean) {
        double u = uniform();
        while (u >= 1.0) u = uniform();
        return -mean * std::log1p(-u);
    }

    // Knuth product method; split keeps exp(-lambda) away from underflow.
    int poisson(double lambda) {
        invariant(lambda >= 0, "Rng::poisson: negative rate");
        int count = 0;
        while (lambda > 500.0) {
            count += poisson_small(500.0);
            lambda -= 500.0;
        }
        return count + poisson_small(lambda);
    }

    // support {1,2,...}, expectation exactly `mean` (mean >= 1)
    int geometric(double mean) {
        invariant(mean >= 1.0, "Rng::geometric: mean must be >= 1");
        if (mean == 1.0) return 1;
        double p = 1.0 / mean;
        double u = uniform();
        while (u >= 1.0) u = uniform();
        double k = std::ceil(std::log1p(-u) / std::log1p(-p));
        if (k < 1.0) k = 1.0;
        return static_cast<int>(k);
    }

    // index drawn proportionally to non-negative weights
    size_t categorical(const std::vector<double>& weights) {
        double total = 0;
        for (double w : weights) total += w;
        invariant(total > 0, "Rng::categorical: all weights zero");
        double x = uniform() * total;
        double acc = 0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    int poisson_small(double lambda) {
        if (lambda <= 0) return 0;
        double limit = std::exp(-lambda);
        double prod = uniform();
        int n = 0;
        while (prod > limit) {
            ++n;
            prod *= uniform();
        }
        return n;
    }

    uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

// Decorrelated child seed for an independent stream.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace olive
