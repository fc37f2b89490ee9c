#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace semigda {

// splitmix64 step; also used to mix several seed components into one.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) { return mix_seed(mix_seed(a, b), c); }

// Deterministic RNG. All distributions are implemented here rather than with
// std:: distribution objects, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    int64_t below(int64_t n) { return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n)); }

    // Standard normal via Box-Muller; two fresh uniforms per draw.
    double normal() {
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(below(i + 1))]);
        }
    }

    // Identity permutation of size n shuffled in place.
    std::vector<int64_t> permutation(int64_t n) {
        std::vector<int64_t> p(static_cast<std::size_t>(n));
        for (int64_t i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace semigda
