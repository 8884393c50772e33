#pragma once

// Deterministic randomness. std::mt19937_64 is fully specified by the
// standard, but the <random> distributions are not, so all transforms
// (uniform doubles, Gaussians, shuffles) are done by hand here. Identical
// (seed, parameters) must give identical streams on every platform.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "nenu/types.hpp"

namespace nenu {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Counter-based seed split: master seed + any number of stream indices
// (experiment, cell, frame, ...). Order-independent parallelism relies on
// every worker deriving its own seed from the same indices.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> ids) {
    uint64_t s = splitmix64(master);
    for (uint64_t id : ids) s = splitmix64(s ^ splitmix64(id + 0x632BE59BD9B4E019ull));
    return s;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1), 53-bit resolution
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return eng_() % n; }

    // standard normal via Box-Muller; caches the second deviate
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * kPi * u01();
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // circularly-symmetric complex Gaussian with E|z|^2 = var
    cd cgauss(double var) {
        const double s = std::sqrt(var / 2.0);
        const double re = gauss();
        const double im = gauss();
        return {s * re, s * im};
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace nenu
