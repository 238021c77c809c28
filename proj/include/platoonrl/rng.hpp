#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace prl {

/// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and generates uniform/normal variates with our
/// own transforms, so results do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Unbiased integer in [lo, hi] via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    /// Marsaglia polar method with a cached spare deviate.
    double normal(double mean, double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return mean + stddev * u * m;
    }

    /// Derives a child seed from a base seed and a path of stream tags, so
    /// independent streams (per episode, per grid cell, per run) can be drawn
    /// without coupling. splitmix64-style mixing.
    static std::uint64_t derive(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = base + 0x9e3779b97f4a7c15ULL;
        for (std::uint64_t p : path) {
            h ^= mix(p + 0x9e3779b97f4a7c15ULL);
            h = mix(h);
        }
        return h;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace prl
