#pragma once

// Bit interleaving and the soft-decision binary code used by the BER
// campaigns: a terminated rate-1/2 convolutional code (constraint length 7,
// generators 171/133 octal) punctured to rate 5/6, decoded with max-log
// BCJR on channel LLRs.

#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "nenu/rng.hpp"

namespace nenu {

namespace cc {

inline constexpr int kMemory = 6;
inline constexpr int kStates = 1 << kMemory;
inline constexpr uint32_t kGen0 = 0171; // octal
inline constexpr uint32_t kGen1 = 0133;

// Period-5 puncturing to rate 5/6 (X first, then Y, per step).
inline constexpr std::array<uint8_t, 5> kPunctX{1, 0, 1, 0, 1};
inline constexpr std::array<uint8_t, 5> kPunctY{1, 1, 0, 1, 0};

inline int parity(uint32_t v) { return __builtin_popcount(v) & 1; }

struct Trellis {
    // [state][input] -> next state and the two coded bits
    std::array<std::array<uint8_t, 2>, kStates> next;
    std::array<std::array<uint8_t, 2>, kStates> out0;
    std::array<std::array<uint8_t, 2>, kStates> out1;
};

inline const Trellis& trellis() {
    static const Trellis t = [] {
        Trellis tr;
        for (int s = 0; s < kStates; ++s) {
            for (int in = 0; in < 2; ++in) {
                const uint32_t full = (static_cast<uint32_t>(in) << kMemory) | static_cast<uint32_t>(s);
                tr.next[s][in] = static_cast<uint8_t>(full >> 1);
                tr.out0[s][in] = static_cast<uint8_t>(parity(full & kGen0));
                tr.out1[s][in] = static_cast<uint8_t>(parity(full & kGen1));
            }
        }
        return tr;
    }();
    return t;
}

// Coded bits kept after puncturing n encoder steps.
inline long kept_bits(long steps) {
    static constexpr std::array<long, 5> partial{0, 2, 3, 4, 5};
    return 6 * (steps / 5) + partial[steps % 5];
}

} // namespace cc

struct CodecConfig {
    long codeword_len = 30720; // punctured bits; must fill whole QAM symbols downstream
    uint64_t interleaver_seed = 1;

    long encoder_steps() const {
        const long approx = codeword_len * 5 / 6;
        for (long n = std::max<long>(0, approx - 6); n <= approx + 6; ++n)
            if (cc::kept_bits(n) == codeword_len) return n;
        throw std::invalid_argument("CodecConfig: codeword length unreachable with the 5/6 puncturing pattern");
    }
    long info_len() const {
        const long n = encoder_steps() - cc::kMemory;
        if (n <= 0) throw std::invalid_argument("CodecConfig: codeword too short");
        return n;
    }
};

// Terminated convolutional encoding with periodic puncturing. The input
// must have exactly cfg.info_len() bits; six zero tail bits drive the
// register back to the all-zero state.
inline std::vector<uint8_t> encode(std::span<const uint8_t> info, const CodecConfig& cfg) {
    const long steps = cfg.encoder_steps();
    if (static_cast<long>(info.size()) != cfg.info_len())
        throw std::invalid_argument("encode: info length must equal cfg.info_len()");
    const auto& tr = cc::trellis();
    std::vector<uint8_t> out;
    out.reserve(cfg.codeword_len);
    uint8_t state = 0;
    for (long t = 0; t < steps; ++t) {
        const int in = t < static_cast<long>(info.size()) ? (info[t] & 1) : 0;
        const uint8_t c0 = tr.out0[state][in];
        const uint8_t c1 = tr.out1[state][in];
        state = tr.next[state][in];
        const int ph = static_cast<int>(t % 5);
        if (cc::kPunctX[ph]) out.push_back(c0);
        if (cc::kPunctY[ph]) out.push_back(c1);
    }
    return out;
}

namespace detail {

inline std::vector<size_t> interleaver_perm(size_t n, uint64_t seed) {
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), size_t{0});
    Rng rng(derive_seed(seed, {0x1EAFull}));
    rng.shuffle(perm);
    return perm;
}

} // namespace detail

template <typename T>
std::vector<T> interleave(std::span<const T> bits, uint64_t seed) {
    const auto perm = detail::interleaver_perm(bits.size(), seed);
    std::vector<T> out(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) out[i] = bits[perm[i]];
    return out;
}

template <typename T>
std::vector<T> deinterleave(std::span<const T> vals, uint64_t seed) {
    const auto perm = detail::interleaver_perm(vals.size(), seed);
    std::vector<T> out(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) out[perm[i]] = vals[i];
    return out;
}

// Max-log BCJR decoding of the punctured code. llrs holds one value per
// transmitted coded bit (positive favors 0); punctured positions are filled
// with zeros internally. Returns hard info bits.
inline std::vector<uint8_t> decode(std::span<const double> llrs, const CodecConfig& cfg) {
    if (static_cast<long>(llrs.size()) != cfg.codeword_len)
        throw std::invalid_argument("decode: LLR length must equal the codeword length");
    const long steps = cfg.encoder_steps();
    const long info_len = cfg.info_len();
    const auto& tr = cc::trellis();

    // depuncture
    std::vector<double> l0(steps, 0.0), l1(steps, 0.0);
    size_t pos = 0;
    for (long t = 0; t < steps; ++t) {
        const int ph = static_cast<int>(t % 5);
        if (cc::kPunctX[ph]) l0[t] = llrs[pos++];
        if (cc::kPunctY[ph]) l1[t] = llrs[pos++];
    }

    constexpr double kNegInf = -1e300;
    const int S = cc::kStates;
    std::vector<double> alpha(static_cast<size_t>(steps + 1) * S, kNegInf);
    alpha[0] = 0.0; // encoder starts in state 0
    auto branch = [&](long t, int s, int in) {
        const double c0 = tr.out0[s][in] ? -1.0 : 1.0;
        const double c1 = tr.out1[s][in] ? -1.0 : 1.0;
        return 0.5 * (c0 * l0[t] + c1 * l1[t]);
    };
    for (long t = 0; t < steps; ++t) {
        double* a = &alpha[static_cast<size_t>(t) * S];
        double* an = &alpha[static_cast<size_t>(t + 1) * S];
        const int in_max = t < info_len ? 2 : 1; // tail is forced to zero
        for (int s = 0; s < S; ++s) {
            if (a[s] <= kNegInf) continue;
            for (int in = 0; in < in_max; ++in) {
                const double m = a[s] + branch(t, s, in);
                const int ns = tr.next[s][in];
                if (m > an[ns]) an[ns] = m;
            }
        }
    }

    std::vector<uint8_t> info(info_len);
    std::vector<double> beta(S, kNegInf), beta_prev(S);
    beta[0] = 0.0; // terminated
    for (long t = steps - 1; t >= 0; --t) {
        const double* a = &alpha[static_cast<size_t>(t) * S];
        std::fill(beta_prev.begin(), beta_prev.end(), kNegInf);
        double best[2] = {kNegInf, kNegInf};
        const int in_max = t < info_len ? 2 : 1;
        for (int s = 0; s < S; ++s) {
            for (int in = 0; in < in_max; ++in) {
                const int ns = tr.next[s][in];
                if (beta[ns] <= kNegInf) continue;
                const double g = branch(t, s, in);
                const double b = g + beta[ns];
                if (b > beta_prev[s]) beta_prev[s] = b;
                if (a[s] > kNegInf) {
                    const double full = a[s] + b;
                    if (full > best[in]) best[in] = full;
                }
            }
        }
        if (t < info_len) info[t] = best[0] >= best[1] ? 0 : 1;
        std::swap(beta, beta_prev);
    }
    return info;
}

} // namespace nenu
