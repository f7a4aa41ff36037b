#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace kamforge {

// xoshiro256** with splitmix64 seeding. Self-contained so that seeded runs
// emit byte-identical streams independent of the standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            si = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo,hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0,n)
    uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

    // standard normal, polar Box-Muller with cached spare
    double normal() {
        if (has_spare_) { has_spare_ = false; return spare_; }
        double u, v, r2;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        const double f = std::sqrt(-2.0 * std::log(r2) / r2);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // uniform point in the closed unit ball of R^dim
    std::vector<double> unit_ball(int dim) {
        std::vector<double> x(dim);
        double n2 = 0.0;
        for (auto& xi : x) { xi = normal(); n2 += xi * xi; }
        const double r = std::pow(uniform(), 1.0 / dim) / std::sqrt(n2 > 0 ? n2 : 1.0);
        for (auto& xi : x) xi *= r;
        return x;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace kamforge
