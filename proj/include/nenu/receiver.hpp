#pragma once

// Receiver-side pieces: per-dimension hard decisions on the distinct point
// set, iterative clipping-noise cancellation (CNC), and bit LLR demapping
// in max-log and exact log-sum forms.
//
// LLR sign convention: positive favors bit 0.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nenu/ofdm.hpp"
#include "nenu/shaping.hpp"
#include "nenu/types.hpp"

namespace nenu {

// Nearest distinct signed amplitude to y (already divided by alpha by the
// caller-facing overloads). Searches the N distinct points, not the M
// labels. Exact midpoint ties go to the smaller-magnitude point.
inline double nearest_point(double y, const Constellation& c) {
    const auto& pts = c.signed_points;
    const auto it = std::lower_bound(pts.begin(), pts.end(), y);
    if (it == pts.begin()) return pts.front();
    if (it == pts.end()) return pts.back();
    const double hi = *it, lo = *(it - 1);
    const double d_lo = y - lo, d_hi = hi - y;
    if (d_lo < d_hi) return lo;
    if (d_hi < d_lo) return hi;
    return std::fabs(lo) <= std::fabs(hi) ? lo : hi;
}

// Per-dimension hard decision on y/alpha, independently for I and Q.
inline cd hard_decision(cd y, const Constellation& c, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("hard_decision: alpha must be positive");
    return {nearest_point(y.real() / alpha, c), nearest_point(y.imag() / alpha, c)};
}

// Clipping noise cancellation. Per iteration: hard decisions on Y/alpha,
// regeneration of the transmitter's CAF (same Nc, J, gamma_cr, A_max and
// therefore the same limiter), distortion estimate D = U - alpha Z, and
// subtraction from the original input. Returns Y after kmax iterations.
inline cvec cnc(std::span<const cd> y_tilde, const Constellation& c, const OfdmParams& p, int kmax) {
    p.validate();
    if (static_cast<int>(y_tilde.size()) != p.nc) throw std::invalid_argument("cnc: |Y| must equal Nc");
    if (kmax < 0) throw std::invalid_argument("cnc: kmax must be >= 0");
    const double alpha = clip_attenuation(p.gamma_cr);
    cvec y(y_tilde.begin(), y_tilde.end());
    cvec z_hat(p.nc);
    for (int k = 0; k < kmax; ++k) {
        for (int i = 0; i < p.nc; ++i) z_hat[i] = hard_decision(y[i], c, alpha);
        const CafResult reg = caf(z_hat, p, c.Es);
        for (int i = 0; i < p.nc; ++i) {
            const cd d_hat = reg.u[i] - alpha * z_hat[i];
            y[i] = y_tilde[i] - d_hat;
        }
    }
    return y;
}

// Max-log LLRs for one real dimension:
//   L_i = (min over A_1 of (y-x)^2 - min over A_0 of (y-x)^2) / noise_var.
// Minimization enumerates the N distinct points once (duplicated labels
// collapse), so the work scales with N rather than M.
inline void llr_maxlog(double y, const Constellation& c, double noise_var, std::span<double> out) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("llr_maxlog: noise_var must be positive");
    if (static_cast<int>(out.size()) != c.n_bits) throw std::invalid_argument("llr_maxlog: bad output size");
    const int n_pts = static_cast<int>(c.signed_points.size());
    std::vector<double> dist(n_pts);
    for (int p = 0; p < n_pts; ++p) {
        const double d = y - c.signed_points[p];
        dist[p] = d * d;
    }
    for (int i = 0; i < c.n_bits; ++i) {
        double dmin[2] = {1e300, 1e300};
        for (int b = 0; b < 2; ++b)
            for (int p : c.level_points[i][b]) dmin[b] = std::min(dmin[b], dist[p]);
        out[i] = (dmin[1] - dmin[0]) / noise_var;
    }
}

inline std::vector<double> llr_maxlog(double y, const Constellation& c, double noise_var) {
    std::vector<double> out(c.n_bits);
    llr_maxlog(y, c, noise_var, out);
    return out;
}

// Exact log-sum LLRs over label slots (duplicates counted, which carries
// the point probabilities); stabilized per bit-level set.
inline void llr_exact(double y, const Constellation& c, double noise_var, std::span<double> out) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("llr_exact: noise_var must be positive");
    if (static_cast<int>(out.size()) != c.n_bits) throw std::invalid_argument("llr_exact: bad output size");
    const int n_pts = static_cast<int>(c.signed_points.size());
    std::vector<double> expo(n_pts);
    for (int p = 0; p < n_pts; ++p) {
        const double d = y - c.signed_points[p];
        expo[p] = -d * d / noise_var;
    }
    for (int i = 0; i < c.n_bits; ++i) {
        double lse[2];
        for (int b = 0; b < 2; ++b) {
            const auto& pts = c.level_points[i][b];
            const auto& wts = c.level_weights[i][b];
            double m = -1e300;
            for (int p : pts) m = std::max(m, expo[p]);
            double s = 0.0;
            for (size_t q = 0; q < pts.size(); ++q) s += wts[q] * std::exp(expo[pts[q]] - m);
            lse[b] = m + std::log(s);
        }
        out[i] = lse[0] - lse[1];
    }
}

inline std::vector<double> llr_exact(double y, const Constellation& c, double noise_var) {
    std::vector<double> out(c.n_bits);
    llr_exact(y, c, noise_var, out);
    return out;
}

} // namespace nenu
