#pragma once

// Subcarrier-domain channels: AWGN and frequency-selective Rayleigh fading
// (applied per subcarrier under a sufficient-CP assumption), plus ZF and
// MMSE equalization.

#include <cmath>
#include <span>
#include <stdexcept>

#include "nenu/fft.hpp"
#include "nenu/ofdm.hpp"
#include "nenu/rng.hpp"
#include "nenu/types.hpp"

namespace nenu {

inline cvec awgn_apply(std::span<const cd> u, double n0, uint64_t seed) {
    if (n0 < 0.0) throw std::invalid_argument("awgn_apply: N0 must be >= 0");
    cvec y(u.begin(), u.end());
    if (n0 == 0.0) return y;
    Rng rng(seed);
    for (auto& v : y) v += rng.cgauss(n0);
    return y;
}

struct ChannelRealization {
    cvec taps;       // L complex path gains, E[sum |taps|^2] = 1
    cvec h;          // Nc per-subcarrier coefficients
    double n0 = 0.0; // noise spectral density used by fading_apply
};

// Uncorrelated equal-power delay profile: taps i.i.d. CN(0, 1/L),
// H_k the Nc-point spectrum of the zero-padded taps (so E|H_k|^2 = 1).
inline ChannelRealization rayleigh_realize(int paths, int nc, uint64_t seed) {
    if (paths < 1) throw std::invalid_argument("rayleigh_realize: paths must be >= 1");
    if (!is_pow2(static_cast<size_t>(nc))) throw std::invalid_argument("rayleigh_realize: Nc must be a power of two");
    if (paths > nc) throw std::invalid_argument("rayleigh_realize: more paths than subcarriers");
    ChannelRealization ch;
    Rng rng(seed);
    ch.taps.resize(paths);
    for (auto& t : ch.taps) t = rng.cgauss(1.0 / paths);
    cvec padded(ch.taps);
    padded.resize(nc, cd{0.0, 0.0});
    unitary_dft_inplace(padded, FftDir::Forward);
    const double scale = std::sqrt(static_cast<double>(nc)); // undo unitary scaling
    ch.h.resize(nc);
    for (int k = 0; k < nc; ++k) ch.h[k] = padded[k] * scale;
    return ch;
}

// Y_k = H_k U_k + W_k with W_k ~ CN(0, ch.n0).
inline cvec fading_apply(std::span<const cd> u, const ChannelRealization& ch, uint64_t seed) {
    if (u.size() != ch.h.size()) throw std::invalid_argument("fading_apply: size mismatch");
    cvec y(u.size());
    Rng rng(seed);
    for (size_t k = 0; k < u.size(); ++k) {
        y[k] = ch.h[k] * u[k];
        if (ch.n0 > 0.0) y[k] += rng.cgauss(ch.n0);
    }
    return y;
}

// Zero-forcing: Y_k / H_k. The per-subcarrier noise variance becomes
// N0 / |H_k|^2; demappers must consume that scaling.
inline cvec zf_equalize(std::span<const cd> y, const ChannelRealization& ch) {
    if (y.size() != ch.h.size()) throw std::invalid_argument("zf_equalize: size mismatch");
    cvec out(y.size());
    for (size_t k = 0; k < y.size(); ++k) {
        if (std::abs(ch.h[k]) < 1e-12) throw std::runtime_error("zf_equalize: vanishing channel coefficient, reject realization");
        out[k] = y[k] / ch.h[k];
    }
    return out;
}

// MMSE detection for the DFT-precoded stream: per-subcarrier Wiener gains
// G_k = H_k* / (|H_k|^2 + 1/snr), then deprecode back to symbol estimates.
// Residual ISI remains; this detector is deliberately suboptimal.
inline cvec mmse_equalize(std::span<const cd> y, const ChannelRealization& ch, double snr) {
    if (y.size() != ch.h.size()) throw std::invalid_argument("mmse_equalize: size mismatch");
    if (!(snr > 0.0)) throw std::invalid_argument("mmse_equalize: snr must be positive");
    cvec filtered(y.size());
    for (size_t k = 0; k < y.size(); ++k) {
        const cd hk = ch.h[k];
        filtered[k] = std::conj(hk) / (std::norm(hk) + 1.0 / snr) * y[k];
    }
    return dft_deprecode(filtered);
}

} // namespace nenu
