#pragma once

// Oversampled OFDM modulation and clipping-and-filtering (CAF): zero-padded
// J*Nc-point unitary IDFT, soft envelope limiter, out-of-band removal.
// Also PAPR measurement and the DFT precoding pair used by the
// single-carrier baseline.

#include <cmath>
#include <span>
#include <stdexcept>

#include "nenu/fft.hpp"
#include "nenu/types.hpp"

namespace nenu {

struct OfdmParams {
    int nc = 1024;         // subcarriers, power of two
    int j = 4;             // oversampling factor
    double gamma_cr = 1.5; // clipping ratio: A_max over the RMS of the unclipped signal

    void validate() const {
        if (!is_pow2(static_cast<size_t>(nc))) throw std::invalid_argument("OfdmParams: Nc must be a power of two");
        if (j < 1) throw std::invalid_argument("OfdmParams: J must be >= 1");
        if (!(gamma_cr > 0.0)) throw std::invalid_argument("OfdmParams: gamma_cr must be positive");
        if (!is_pow2(static_cast<size_t>(nc) * static_cast<size_t>(j)))
            throw std::invalid_argument("OfdmParams: J*Nc must be a power of two");
    }

    // Limiter threshold. Under the unitary transform convention the
    // time-domain sample power of a subcarrier ensemble with symbol energy
    // Es is Es/J, so this makes gamma_cr the ratio of A_max to the RMS of
    // the signal actually being clipped. Fixed per system (ensemble Es, not
    // per-symbol power) so the receiver can regenerate the identical limiter.
    double a_max(double Es) const { return gamma_cr * std::sqrt(Es / j); }
};

// J-times oversampled time samples: append (J-1)*Nc zeros after the Nc data
// symbols (no spectral centering), then inverse unitary DFT.
inline cvec modulate(std::span<const cd> z, int j) {
    if (j < 1) throw std::invalid_argument("modulate: J must be >= 1");
    cvec zp(z.begin(), z.end());
    zp.resize(z.size() * static_cast<size_t>(j), cd{0.0, 0.0});
    unitary_dft_inplace(zp, FftDir::Inverse);
    return zp;
}

// Soft envelope limiter: magnitudes capped at a_max, phases untouched.
inline void soft_clip(cvec& s, double a_max) {
    if (!(a_max > 0.0)) throw std::invalid_argument("soft_clip: A_max must be positive");
    for (auto& v : s) {
        const double mag = std::abs(v);
        if (mag > a_max) v *= a_max / mag;
    }
}

// Bussgang attenuation of the soft limiter for a Gaussian input:
// alpha = 1 - e^{-g^2} + (sqrt(pi) g / 2) erfc(g).
inline double clip_attenuation(double gamma_cr) {
    if (gamma_cr < 0.0) throw std::invalid_argument("clip_attenuation: gamma_cr must be >= 0");
    return 1.0 - std::exp(-gamma_cr * gamma_cr) +
           std::sqrt(kPi) * gamma_cr / 2.0 * std::erfc(gamma_cr);
}

struct CafResult {
    cvec u;                    // Nc in-band symbols after clipping and filtering
    double p_in = 0.0;         // measured |Z|^2 / Nc of this symbol
    double p_av = 0.0;         // measured |U|^2 / Nc of this symbol
    double alpha_theory = 0.0; // closed-form Bussgang gain at gamma_cr
};

// Full CAF pass: modulate, clip at the fixed system A_max, transform back,
// keep the first Nc bins. es is the ensemble symbol energy that defines the
// limiter threshold.
inline CafResult caf(std::span<const cd> z, const OfdmParams& p, double es) {
    p.validate();
    if (static_cast<int>(z.size()) != p.nc) throw std::invalid_argument("caf: |Z| must equal Nc");
    CafResult r;
    for (const cd& v : z) r.p_in += std::norm(v);
    r.p_in /= p.nc;

    cvec s = modulate(z, p.j);
    soft_clip(s, p.a_max(es));
    unitary_dft_inplace(s, FftDir::Forward);
    r.u.assign(s.begin(), s.begin() + p.nc);
    for (const cd& v : r.u) r.p_av += std::norm(v);
    r.p_av /= p.nc;
    r.alpha_theory = clip_attenuation(p.gamma_cr);
    return r;
}

// Peak-to-average power ratio of a sample block, in dB.
inline double papr_db(std::span<const cd> s) {
    if (s.empty()) throw std::invalid_argument("papr_db: empty input");
    double peak = 0.0, mean = 0.0;
    for (const cd& v : s) {
        const double pw = std::norm(v);
        if (pw > peak) peak = pw;
        mean += pw;
    }
    mean /= static_cast<double>(s.size());
    if (!(mean > 0.0)) throw std::invalid_argument("papr_db: zero-power input");
    return 10.0 * std::log10(peak / mean);
}

// DFT precoding for the single-carrier baseline: forward unitary DFT of the
// symbol block before subcarrier mapping, and its inverse after detection.
inline cvec dft_precode(std::span<const cd> z) { return unitary_dft(z, FftDir::Forward); }
inline cvec dft_deprecode(std::span<const cd> y) { return unitary_dft(y, FftDir::Inverse); }

} // namespace nenu
