#pragma once

// End-to-end pipelines behind the CLI and the acceptance campaigns.
//
// Systems (PAPR / BER):   S1 plain BICM-OFDM, S2 CAF + CNC, S3 DFT precoding.
// BMI pipeline variants:  A1 no CAF, A2 CAF only, A3 CAF + CNC (AWGN);
//                         F1 no CAF, F2 CAF + CNC (Rayleigh fading).
//
// Every random draw comes from a seed derived from (master seed, frame,
// purpose), so results do not depend on evaluation order or thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nenu/channel.hpp"
#include "nenu/coding.hpp"
#include "nenu/metrics.hpp"
#include "nenu/ofdm.hpp"
#include "nenu/parallel.hpp"
#include "nenu/receiver.hpp"
#include "nenu/rng.hpp"
#include "nenu/shaping.hpp"

namespace nenu {

enum class SystemKind { S1, S2, S3 };
enum class ChannelKind { Awgn, Rayleigh };
enum class BmiVariant { A1, A2, A3, F1, F2 };

inline bool variant_uses_caf(BmiVariant v) { return v == BmiVariant::A2 || v == BmiVariant::A3 || v == BmiVariant::F2; }
inline bool variant_uses_cnc(BmiVariant v) { return v == BmiVariant::A3 || v == BmiVariant::F2; }
inline bool variant_fading(BmiVariant v) { return v == BmiVariant::F1 || v == BmiVariant::F2; }

namespace seedns {
// purpose tags for derive_seed
inline constexpr uint64_t kLabels = 1, kNoise = 2, kChannel = 3, kInfo = 4, kCalib = 5;
} // namespace seedns

// ---- Monte-Carlo BMI through the transmit/receive pipeline ---------------

struct McBmiConfig {
    OfdmParams ofdm{};
    int kmax = 10;          // CNC iterations for A3/F2
    int paths = 4;          // Rayleigh paths for F1/F2
    long qam_symbols = 200000;
    unsigned threads = 1;
};

struct McBmiResult {
    BmiEstimate bmi;
    double p_av = 0.0;      // average transmit power per subcarrier
    double n0 = 0.0;        // channel noise density at the requested SNR
    double resid_var = 0.0; // residual distortion power per complex symbol
};

// SNR is defined against the actual transmit power: SNR = P_av / N0.
// The demapper metric treats residual clipping distortion as Gaussian with
// the batch-measured variance (a practical receiver's assumption).
inline McBmiResult mc_bmi(BmiVariant v, const Constellation& c, double snr_db, const McBmiConfig& cfg,
                          uint64_t seed) {
    cfg.ofdm.validate();
    const int nc = cfg.ofdm.nc;
    const long n_frames = (cfg.qam_symbols + nc - 1) / nc;
    const bool use_caf = variant_uses_caf(v);
    const bool use_cnc = variant_uses_cnc(v);
    const bool fading = variant_fading(v);
    const double alpha = use_caf ? clip_attenuation(cfg.ofdm.gamma_cr) : 1.0;
    const double gamma = std::pow(10.0, snr_db / 10.0);

    struct Frame {
        std::vector<uint32_t> li, lq;
        cvec z, u;
        double p_av = 0.0;
    };
    std::vector<Frame> frames(n_frames);
    parallel_for(
        n_frames,
        [&](size_t f) {
            Frame& fr = frames[f];
            Rng rng(derive_seed(seed, {f, seedns::kLabels}));
            fr.li.resize(nc);
            fr.lq.resize(nc);
            fr.z.resize(nc);
            for (int k = 0; k < nc; ++k) {
                fr.li[k] = static_cast<uint32_t>(rng.below(c.M));
                fr.lq[k] = static_cast<uint32_t>(rng.below(c.M));
                fr.z[k] = {c.amp_by_label[fr.li[k]], c.amp_by_label[fr.lq[k]]};
            }
            if (use_caf) {
                CafResult r = caf(fr.z, cfg.ofdm, c.Es);
                fr.u = std::move(r.u);
                fr.p_av = r.p_av;
            } else {
                fr.u = fr.z;
            }
        },
        cfg.threads);

    double p_av = c.Es;
    if (use_caf) {
        p_av = 0.0;
        for (const auto& fr : frames) p_av += fr.p_av;
        p_av /= static_cast<double>(n_frames);
    }
    const double n0 = p_av / gamma;

    struct RxFrame {
        std::vector<double> y_dim;   // 2*Nc received dimensions, already /alpha
        std::vector<double> nv_dim;  // complex-domain noise variance per dimension (pre-distortion)
        double resid_sq = 0.0;       // sum |D - D_hat|^2 over subcarriers
    };
    std::vector<RxFrame> rx(n_frames);
    parallel_for(
        n_frames,
        [&](size_t f) {
            const Frame& fr = frames[f];
            RxFrame& out = rx[f];
            Rng noise_rng(derive_seed(seed, {f, seedns::kNoise}));
            cvec w(nc), y(nc);
            ChannelRealization ch;
            if (fading) ch = rayleigh_realize(cfg.paths, nc, derive_seed(seed, {f, seedns::kChannel}));
            for (int k = 0; k < nc; ++k) {
                w[k] = noise_rng.cgauss(n0);
                y[k] = fading ? ch.h[k] * fr.u[k] + w[k] : fr.u[k] + w[k];
            }
            cvec w_eff = w;
            if (fading) {
                y = zf_equalize(y, ch);
                for (int k = 0; k < nc; ++k) w_eff[k] = w[k] / ch.h[k];
            }
            const cvec y_fin = use_cnc ? cnc(y, c, cfg.ofdm, cfg.kmax) : y;

            out.y_dim.resize(2 * nc);
            out.nv_dim.resize(2 * nc);
            for (int k = 0; k < nc; ++k) {
                const cd resid = y_fin[k] - alpha * fr.z[k] - w_eff[k];
                out.resid_sq += std::norm(resid);
                out.y_dim[2 * k] = y_fin[k].real() / alpha;
                out.y_dim[2 * k + 1] = y_fin[k].imag() / alpha;
                const double nv = fading ? n0 / std::norm(ch.h[k]) : n0;
                out.nv_dim[2 * k] = nv;
                out.nv_dim[2 * k + 1] = nv;
            }
        },
        cfg.threads);

    double resid_var = 0.0;
    for (const auto& r : rx) resid_var += r.resid_sq;
    resid_var /= static_cast<double>(n_frames) * nc;

    std::vector<DimObservation> obs;
    obs.reserve(static_cast<size_t>(n_frames) * 2 * nc);
    for (long f = 0; f < n_frames; ++f) {
        for (int k = 0; k < nc; ++k) {
            const double nv0 = (rx[f].nv_dim[2 * k] + resid_var) / (alpha * alpha);
            const double nv1 = (rx[f].nv_dim[2 * k + 1] + resid_var) / (alpha * alpha);
            obs.push_back({frames[f].li[k], rx[f].y_dim[2 * k], nv0});
            obs.push_back({frames[f].lq[k], rx[f].y_dim[2 * k + 1], nv1});
        }
    }
    McBmiResult res;
    res.bmi = bmi_monte_carlo(obs, c);
    res.p_av = p_av;
    res.n0 = n0;
    res.resid_var = resid_var;
    return res;
}

// Evaluator adapter for optimize_params over a CAF/CNC/fading pipeline.
inline CellEvaluator mc_evaluator(BmiVariant v, const McBmiConfig& cfg) {
    return [v, cfg](const Constellation& c, double snr_db, uint64_t cell_seed) {
        return mc_bmi(v, c, snr_db, cfg, cell_seed).bmi;
    };
}

// ---- PAPR ensembles -------------------------------------------------------

struct PaprConfig {
    OfdmParams ofdm{};
    long symbols = 100000; // OFDM symbols
    unsigned threads = 1;
};

// PAPR of the J-times oversampled final transmit waveform of each OFDM
// symbol (for S2 that is the re-modulated in-band signal after CAF).
// Returns the ensemble sorted ascending.
inline dvec papr_ensemble(SystemKind sys, const Constellation& c, const PaprConfig& cfg, uint64_t seed) {
    cfg.ofdm.validate();
    const int nc = cfg.ofdm.nc;
    dvec out(cfg.symbols);
    parallel_for(
        static_cast<size_t>(cfg.symbols),
        [&](size_t f) {
            Rng rng(derive_seed(seed, {f, seedns::kLabels}));
            cvec z(nc);
            for (int k = 0; k < nc; ++k) {
                const double xi = c.amp_by_label[rng.below(c.M)];
                const double xq = c.amp_by_label[rng.below(c.M)];
                z[k] = {xi, xq};
            }
            cvec wave;
            switch (sys) {
            case SystemKind::S1:
                wave = modulate(z, cfg.ofdm.j);
                break;
            case SystemKind::S2: {
                const CafResult r = caf(z, cfg.ofdm, c.Es);
                wave = modulate(r.u, cfg.ofdm.j);
                break;
            }
            case SystemKind::S3: {
                const cvec v = dft_precode(z);
                wave = modulate(v, cfg.ofdm.j);
                break;
            }
            }
            out[f] = papr_db(wave);
        },
        cfg.threads);
    std::sort(out.begin(), out.end());
    return out;
}

struct CcdfPoint {
    double papr_db = 0.0;
    double ccdf = 0.0;
};

// ccdf at value sorted[i] is the fraction of samples strictly above it.
// The bulk is decimated; the upper tail (where the CCDF is small and every
// sample matters on a log plot) is emitted in full.
inline std::vector<CcdfPoint> ccdf_points(const dvec& sorted_papr, size_t max_points = 2000) {
    const size_t n = sorted_papr.size();
    if (n == 0) throw std::invalid_argument("ccdf_points: empty ensemble");
    std::vector<CcdfPoint> pts;
    const size_t tail = std::min(n, max_points / 2 + 1);
    const size_t tail_start = n - tail;
    const size_t stride = std::max<size_t>(1, tail_start / std::max<size_t>(1, max_points - tail));
    for (size_t i = 0; i < tail_start; i += stride)
        pts.push_back({sorted_papr[i], static_cast<double>(n - 1 - i) / static_cast<double>(n)});
    for (size_t i = tail_start; i < n; ++i)
        pts.push_back({sorted_papr[i], static_cast<double>(n - 1 - i) / static_cast<double>(n)});
    return pts;
}

// PAPR threshold exceeded with probability `target` (linear interpolation
// between order statistics in dB).
inline double papr_at_ccdf(const dvec& sorted_papr, double target) {
    const size_t n = sorted_papr.size();
    if (n < 2) throw std::invalid_argument("papr_at_ccdf: ensemble too small");
    if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("papr_at_ccdf: target in (0,1)");
    const double pos = (1.0 - target) * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= n) return sorted_papr.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted_papr[lo] * (1.0 - frac) + sorted_papr[lo + 1] * frac;
}

// ---- BER campaigns ---------------------------------------------------------

struct BerConfig {
    OfdmParams ofdm{};
    int kmax = 10; // CNC iterations when sys == S2
    ChannelKind channel = ChannelKind::Awgn;
    int paths = 4;
    CodecConfig codec{};
    long target_errors = 100;
    long max_frames = 2000;
    long batch = 16; // frames per scheduling batch; fixed so thread count cannot affect results
    unsigned threads = 1;
};

struct BerPoint {
    double snr_db = 0.0;
    long bit_errors = 0;
    long bits = 0;
    long frames = 0;
    double ber() const { return bits > 0 ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
};

namespace detail {

// Ensemble average in-band power after CAF, used to pin SNR = P_av/N0 as a
// fixed system constant for S2 campaigns.
inline double calibrate_p_av(const Constellation& c, const OfdmParams& ofdm, uint64_t seed, int symbols = 64) {
    double acc = 0.0;
    for (int f = 0; f < symbols; ++f) {
        Rng rng(derive_seed(seed, {static_cast<uint64_t>(f), seedns::kCalib}));
        cvec z(ofdm.nc);
        for (int k = 0; k < ofdm.nc; ++k)
            z[k] = {c.amp_by_label[rng.below(c.M)], c.amp_by_label[rng.below(c.M)]};
        acc += caf(z, ofdm, c.Es).p_av;
    }
    return acc / symbols;
}

} // namespace detail

// One coded frame (codeword) through system `sys` at snr_db; returns the
// number of info bit errors.
inline long ber_frame(SystemKind sys, const Constellation& c, double snr_db, const BerConfig& cfg,
                      double p_av, uint64_t seed, uint64_t frame_idx) {
    const int nc = cfg.ofdm.nc;
    const int n = c.n_bits;
    const int bits_per_qam = 2 * n;
    if (cfg.codec.codeword_len % bits_per_qam != 0)
        throw std::invalid_argument("ber_frame: codeword length must fill whole QAM symbols");
    const long qam_per_cw = cfg.codec.codeword_len / bits_per_qam;
    if (qam_per_cw % nc != 0)
        throw std::invalid_argument("ber_frame: codeword must fill whole OFDM symbols");
    const long n_ofdm = qam_per_cw / nc;
    const bool fading = cfg.channel == ChannelKind::Rayleigh;
    const double alpha = sys == SystemKind::S2 ? clip_attenuation(cfg.ofdm.gamma_cr) : 1.0;
    const double gamma = std::pow(10.0, snr_db / 10.0);
    const double n0 = p_av / gamma;

    Rng info_rng(derive_seed(seed, {frame_idx, seedns::kInfo}));
    std::vector<uint8_t> info(cfg.codec.info_len());
    for (auto& b : info) b = static_cast<uint8_t>(info_rng.next_u64() & 1u);
    const std::vector<uint8_t> coded = encode(info, cfg.codec);
    const std::vector<uint8_t> inter = interleave<uint8_t>(coded, cfg.codec.interleaver_seed);

    // map: per QAM symbol, n bits (MSB first) for I then n bits for Q
    std::vector<uint32_t> li(qam_per_cw), lq(qam_per_cw);
    cvec z(qam_per_cw);
    for (long q = 0; q < qam_per_cw; ++q) {
        uint32_t a = 0, b = 0;
        for (int i = 0; i < n; ++i) a = (a << 1) | inter[q * bits_per_qam + i];
        for (int i = 0; i < n; ++i) b = (b << 1) | inter[q * bits_per_qam + n + i];
        li[q] = a;
        lq[q] = b;
        z[q] = {c.amp_by_label[a], c.amp_by_label[b]};
    }

    ChannelRealization ch;
    if (fading) ch = rayleigh_realize(cfg.paths, nc, derive_seed(seed, {frame_idx, seedns::kChannel}));
    Rng noise_rng(derive_seed(seed, {frame_idx, seedns::kNoise}));

    std::vector<double> llrs(cfg.codec.codeword_len);
    for (long o = 0; o < n_ofdm; ++o) {
        const std::span<const cd> zo(z.data() + o * nc, nc);
        cvec u;
        switch (sys) {
        case SystemKind::S1: u.assign(zo.begin(), zo.end()); break;
        case SystemKind::S2: u = caf(zo, cfg.ofdm, c.Es).u; break;
        case SystemKind::S3: u = dft_precode(zo); break;
        }
        cvec w(nc), y(nc);
        for (int k = 0; k < nc; ++k) {
            w[k] = noise_rng.cgauss(n0);
            y[k] = fading ? ch.h[k] * u[k] + w[k] : u[k] + w[k];
        }

        cvec y_sym;                  // symbol-rate estimates fed to the demapper
        std::vector<double> nv(nc);  // complex-domain metric variance per subcarrier
        if (sys == SystemKind::S3) {
            cvec v_hat;
            if (fading) {
                v_hat = mmse_equalize(y, ch, gamma);
                double gbar = 0.0;
                for (int k = 0; k < nc; ++k) gbar += std::norm(ch.h[k]) / (std::norm(ch.h[k]) + 1.0 / gamma);
                gbar /= nc;
                for (auto& s : v_hat) s /= gbar; // unbias the MMSE gain
            } else {
                v_hat = dft_deprecode(y);
            }
            // genie metric variance: residual ISI + noise, pooled per frame
            double var = 0.0;
            for (int k = 0; k < nc; ++k) var += std::norm(v_hat[k] - zo[k]);
            var /= nc;
            y_sym = std::move(v_hat);
            std::fill(nv.begin(), nv.end(), var);
        } else {
            cvec ytil = y;
            cvec w_eff = w;
            if (fading) {
                ytil = zf_equalize(y, ch);
                for (int k = 0; k < nc; ++k) w_eff[k] = w[k] / ch.h[k];
            }
            cvec y_fin = sys == SystemKind::S2 ? cnc(ytil, c, cfg.ofdm, cfg.kmax) : std::move(ytil);
            double resid_var = 0.0;
            if (sys == SystemKind::S2) {
                for (int k = 0; k < nc; ++k) resid_var += std::norm(y_fin[k] - alpha * z[o * nc + k] - w_eff[k]);
                resid_var /= nc;
            }
            y_sym.resize(nc);
            for (int k = 0; k < nc; ++k) {
                y_sym[k] = y_fin[k] / alpha;
                const double chan_nv = fading ? n0 / std::norm(ch.h[k]) : n0;
                nv[k] = (chan_nv + resid_var) / (alpha * alpha);
            }
        }

        std::array<double, 32> lbuf{};
        for (int k = 0; k < nc; ++k) {
            const long q = o * nc + k;
            llr_maxlog(y_sym[k].real(), c, nv[k], std::span<double>(lbuf.data(), n));
            for (int i = 0; i < n; ++i) llrs[q * bits_per_qam + i] = lbuf[i];
            llr_maxlog(y_sym[k].imag(), c, nv[k], std::span<double>(lbuf.data(), n));
            for (int i = 0; i < n; ++i) llrs[q * bits_per_qam + n + i] = lbuf[i];
        }
    }

    const std::vector<double> deint = deinterleave<double>(llrs, cfg.codec.interleaver_seed);
    const std::vector<uint8_t> decoded = decode(deint, cfg.codec);
    long errors = 0;
    for (size_t i = 0; i < info.size(); ++i) errors += decoded[i] != info[i];
    return errors;
}

// Accumulates frames in fixed-size batches until the target error count or
// the frame cap is reached. Batch boundaries (not thread count) decide when
// the stop condition is inspected, so results are thread-count invariant.
inline BerPoint ber_point(SystemKind sys, const Constellation& c, double snr_db, const BerConfig& cfg,
                          uint64_t seed) {
    cfg.ofdm.validate();
    const double p_av = sys == SystemKind::S2 ? detail::calibrate_p_av(c, cfg.ofdm, seed) : c.Es;
    BerPoint pt;
    pt.snr_db = snr_db;
    const long info_len = cfg.codec.info_len();
    std::vector<long> batch_errors(cfg.batch);
    for (long start = 0; start < cfg.max_frames; start += cfg.batch) {
        const long count = std::min(cfg.batch, cfg.max_frames - start);
        parallel_for(
            static_cast<size_t>(count),
            [&](size_t i) {
                batch_errors[i] = ber_frame(sys, c, snr_db, cfg, p_av, seed,
                                            static_cast<uint64_t>(start + static_cast<long>(i)));
            },
            cfg.threads);
        for (long i = 0; i < count; ++i) {
            pt.bit_errors += batch_errors[i];
            pt.bits += info_len;
            pt.frames += 1;
        }
        if (pt.bit_errors >= cfg.target_errors) break;
    }
    return pt;
}

} // namespace nenu
