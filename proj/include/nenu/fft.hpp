#pragma once

// Power-of-two complex FFT, unitary scaling (1/sqrt(L) in both directions)
// so forward o inverse is the identity and Parseval holds without bookkeeping.

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>

#include "nenu/types.hpp"

namespace nenu {

enum class FftDir { Forward, Inverse };

namespace detail {

struct FftPlan {
    size_t n = 0;
    std::vector<size_t> bitrev;
    cvec twiddle; // forward twiddles, n/2 entries
};

inline const FftPlan& fft_plan(size_t n) {
    thread_local std::unordered_map<size_t, std::unique_ptr<FftPlan>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;

    auto plan = std::make_unique<FftPlan>();
    plan->n = n;
    plan->bitrev.assign(n, 0);
    int log2n = 0;
    while ((size_t{1} << log2n) < n) ++log2n;
    for (size_t i = 0; i < n; ++i) {
        size_t r = 0;
        for (int b = 0; b < log2n; ++b)
            if (i & (size_t{1} << b)) r |= size_t{1} << (log2n - 1 - b);
        plan->bitrev[i] = r;
    }
    plan->twiddle.resize(n / 2);
    for (size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        plan->twiddle[k] = {std::cos(ang), std::sin(ang)};
    }
    const FftPlan& ref = *plan;
    cache.emplace(n, std::move(plan));
    return ref;
}

} // namespace detail

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place unitary DFT. Throws unless the length is a power of two.
inline void unitary_dft_inplace(cvec& x, FftDir dir) {
    const size_t n = x.size();
    if (!is_pow2(n)) throw std::invalid_argument("unitary_dft: length must be a power of two");
    if (n == 1) return;
    const auto& plan = detail::fft_plan(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t j = plan.bitrev[i];
        if (i < j) std::swap(x[i], x[j]);
    }
    const bool inv = dir == FftDir::Inverse;
    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t half = len >> 1;
        const size_t step = n / len;
        for (size_t base = 0; base < n; base += len) {
            for (size_t k = 0; k < half; ++k) {
                cd w = plan.twiddle[k * step];
                if (inv) w = std::conj(w);
                const cd t = x[base + k + half] * w;
                const cd u = x[base + k];
                x[base + k] = u + t;
                x[base + k + half] = u - t;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : x) v *= scale;
}

inline cvec unitary_dft(std::span<const cd> x, FftDir dir) {
    cvec y(x.begin(), x.end());
    unitary_dft_inplace(y, dir);
    return y;
}

} // namespace nenu
