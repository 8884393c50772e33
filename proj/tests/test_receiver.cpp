#include <catch_amalgamated.hpp>

#include <cmath>

#include "nenu/channel.hpp"
#include "nenu/receiver.hpp"
#include "nenu/rng.hpp"
#include "nenu/shaping.hpp"

using namespace nenu;

namespace {

cvec random_symbols(const Constellation& c, int n, uint64_t seed) {
    Rng rng(seed);
    cvec z(n);
    for (auto& v : z)
        v = {c.amp_by_label[rng.below(c.M)], c.amp_by_label[rng.below(c.M)]};
    return z;
}

// slot-enumerating reference demappers, independent of the level-set caches
void llr_exact_ref(double y, const Constellation& c, double nv, std::vector<double>& out) {
    out.assign(c.n_bits, 0.0);
    for (int i = 0; i < c.n_bits; ++i) {
        double s[2] = {0.0, 0.0};
        for (int lab = 0; lab < c.M; ++lab) {
            const double d = y - c.amp_by_label[lab];
            s[(lab >> (c.n_bits - 1 - i)) & 1] += std::exp(-d * d / nv);
        }
        out[i] = std::log(s[0]) - std::log(s[1]);
    }
}

} // namespace

TEST_CASE("hard_decision recovers scaled constellation points") {
    const Constellation c = design(32, 20, 1.0, 2.0);
    const double alpha = 0.9396585732;
    for (int ki = 0; ki < 32; ++ki) {
        for (int kq : {0, 5, 17, 31}) {
            const cd z{c.amp_by_label[ki], c.amp_by_label[kq]};
            const cd dec = hard_decision(alpha * z, c, alpha);
            REQUIRE(dec.real() == Catch::Approx(z.real()).epsilon(1e-12));
            REQUIRE(dec.imag() == Catch::Approx(z.imag()).epsilon(1e-12));
        }
    }
    REQUIRE_THROWS_AS(hard_decision(cd{0.1, 0.1}, c, 0.0), std::invalid_argument);
}

TEST_CASE("hard_decision ties go to the smaller amplitude") {
    const Constellation c = design(4, 4, 0.0, 2.0);
    const double a1 = c.distinct_points[0], a3 = c.distinct_points[1];
    const double mid = 0.5 * (a1 + a3);
    REQUIRE(nearest_point(mid, c) == a1);
    REQUIRE(nearest_point(-mid, c) == -a1);
    REQUIRE(nearest_point(0.0, c) == -a1); // symmetric tie, deterministic pick
    REQUIRE(nearest_point(10.0, c) == a3);
    REQUIRE(nearest_point(-10.0, c) == -a3);
}

TEST_CASE("hard decisions stay reliable at 27 dB for (32,20)-PAM") {
    const Constellation c = design(32, 20, 1.0, 2.0);
    const double gamma = std::pow(10.0, 2.7);
    const double n0 = c.Es / gamma;
    long errors = 0, total = 0;
    for (int f = 0; f < 20; ++f) {
        const cvec z = random_symbols(c, 1024, derive_seed(3, {static_cast<uint64_t>(f)}));
        const cvec y = awgn_apply(z, n0, derive_seed(4, {static_cast<uint64_t>(f)}));
        for (int k = 0; k < 1024; ++k) {
            const cd dec = hard_decision(y[k], c, 1.0);
            const cd z_pt = hard_decision(z[k], c, 1.0); // snap labels onto distinct points
            errors += (dec.real() != z_pt.real()) + (dec.imag() != z_pt.imag());
            total += 2;
        }
    }
    REQUIRE(static_cast<double>(errors) / total < 1e-1);
}

TEST_CASE("cnc is inert without clipping") {
    const Constellation c = design(32, 24, 0.93, 2.0);
    OfdmParams p{256, 4, 10.0};
    const cvec z = random_symbols(c, 256, 8);
    const cvec out = cnc(z, c, p, 5);
    for (int k = 0; k < 256; ++k) REQUIRE(std::abs(out[k] - z[k]) < 1e-9);
}

TEST_CASE("cnc cancels distortion exactly after one iteration when decisions are right") {
    // 4-PAM subcarriers clipped at 1.5: decisions survive the distortion,
    // so the regenerated CAF reproduces D and the first iteration lands on
    // alpha * Z exactly.
    const Constellation c = design(4, 4, 0.0, 2.0);
    OfdmParams p{1024, 4, 1.5};
    const double alpha = clip_attenuation(p.gamma_cr);
    const cvec z = random_symbols(c, 1024, 15);
    const CafResult r = caf(z, p, c.Es);

    // verify the premise: noiseless hard decisions are all correct
    for (int k = 0; k < 1024; ++k) {
        const cd dec = hard_decision(r.u[k], c, alpha);
        REQUIRE(dec.real() == Catch::Approx(z[k].real()).epsilon(1e-12));
        REQUIRE(dec.imag() == Catch::Approx(z[k].imag()).epsilon(1e-12));
    }

    const cvec out = cnc(r.u, c, p, 1);
    double resid = 0.0;
    for (int k = 0; k < 1024; ++k) resid += std::norm(out[k] - alpha * z[k]);
    REQUIRE(resid < 1e-10);
}

TEST_CASE("cnc residual distortion shrinks with iterations") {
    const Constellation c = design(32, 24, 0.93, 2.0);
    OfdmParams p{1024, 4, 1.5};
    const double alpha = clip_attenuation(p.gamma_cr);
    const double gamma = std::pow(10.0, 2.7); // 27 dB
    std::vector<double> resid(4, 0.0);
    const int frames = 12;
    for (int f = 0; f < frames; ++f) {
        const cvec z = random_symbols(c, 1024, derive_seed(31, {static_cast<uint64_t>(f)}));
        const CafResult r = caf(z, p, c.Es);
        const double n0 = r.p_av / gamma;
        cvec w(1024);
        Rng rng(derive_seed(32, {static_cast<uint64_t>(f)}));
        cvec y(1024);
        for (int k = 0; k < 1024; ++k) {
            w[k] = rng.cgauss(n0);
            y[k] = r.u[k] + w[k];
        }
        for (int kmax = 0; kmax < 4; ++kmax) {
            const cvec out = cnc(y, c, p, kmax);
            double acc = 0.0;
            for (int k = 0; k < 1024; ++k) acc += std::norm(out[k] - alpha * z[k] - w[k]);
            resid[kmax] += acc / 1024.0;
        }
    }
    for (int kmax = 1; kmax < 4; ++kmax) REQUIRE(resid[kmax] < resid[kmax - 1] * 1.02);
    REQUIRE(resid[3] < 0.5 * resid[0]);
}

TEST_CASE("llr sign conventions") {
    // unmerged constellation: y sitting exactly on a point with bit i = 0
    // gives a positive LLR (merged points can carry both bit values at a
    // level, which legitimately zeroes the max-log metric there)
    const Constellation c = design(32, 32, 0.88, 2.0);
    for (int k : {0, 3, 9, 15}) {
        const uint32_t lab = c.labels.labels[k];
        const double y = c.amp_by_label[lab];
        const std::vector<double> l = llr_maxlog(y, c, 0.01);
        for (int i = 0; i < c.n_bits; ++i) {
            const double b = c.bit_of(lab, i);
            if (b == 0) {
                REQUIRE(l[i] > 0.0);
            } else {
                REQUIRE(l[i] < 0.0);
            }
        }
    }
    // symmetric constellation: MSB LLR vanishes at y = 0
    const Constellation m = design(32, 20, 1.0, 2.0);
    REQUIRE(llr_maxlog(0.0, m, 1.0)[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(llr_exact(0.0, m, 1.0)[0] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("llr antisymmetry in y") {
    const Constellation c = design(32, 14, 0.9, 2.0);
    for (double y : {0.13, 0.7, 1.9}) {
        const std::vector<double> lp = llr_exact(y, c, 0.05);
        const std::vector<double> lm = llr_exact(-y, c, 0.05);
        REQUIRE(lm[0] == Catch::Approx(-lp[0]).margin(1e-9));
        for (int i = 1; i < c.n_bits; ++i) REQUIRE(lm[i] == Catch::Approx(lp[i]).margin(1e-9));
    }
}

TEST_CASE("bpsk exact llr closed form") {
    const Constellation c = design(32, 2, 1.0, 2.0); // BPSK after merging
    const double a = c.distinct_points[0];
    for (double y : {-0.8, 0.05, 1.3}) {
        const std::vector<double> l = llr_exact(y, c, 0.37);
        REQUIRE(l[0] == Catch::Approx(4.0 * y * a / 0.37).epsilon(1e-9));
    }
}

TEST_CASE("llr_exact equals the slot-enumerating reference") {
    std::vector<double> ref;
    for (int N : {32, 20, 8}) {
        const Constellation c = design(32, N, 0.95, 2.0);
        for (double y : {-2.1, -0.4, 0.0, 0.33, 1.7}) {
            const std::vector<double> fast = llr_exact(y, c, 0.12);
            llr_exact_ref(y, c, 0.12, ref);
            for (int i = 0; i < c.n_bits; ++i) REQUIRE(fast[i] == Catch::Approx(ref[i]).margin(1e-9));
        }
    }
}

TEST_CASE("maxlog approaches exact llr at high snr") {
    // 4-PAM at 30 dB: same-set midpoints are many sigma from every point,
    // so the agreement is absolute
    const Constellation c4 = design(4, 4, 0.0, 2.0);
    const double n0_4 = c4.Es / std::pow(10.0, 3.0);
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const double x = c4.amp_by_label[rng.below(4)];
        const double y = x + std::sqrt(n0_4 / 2.0) * rng.gauss();
        const std::vector<double> le = llr_exact(y, c4, n0_4);
        const std::vector<double> lm = llr_maxlog(y, c4, n0_4);
        for (int i = 0; i < 2; ++i) REQUIRE(std::fabs(le[i] - lm[i]) < 0.1);
    }

    // dense shaped constellation: draws near a gap midpoint keep an ln(2)
    // same-set ambiguity at any SNR, so the agreement is relative there
    const Constellation c = design(32, 32, 0.88, 2.0);
    const double n0 = c.Es / std::pow(10.0, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double x = c.amp_by_label[rng.below(32)];
        const double y = x + std::sqrt(n0 / 2.0) * rng.gauss();
        const std::vector<double> le = llr_exact(y, c, n0);
        const std::vector<double> lm = llr_maxlog(y, c, n0);
        for (int i = 0; i < c.n_bits; ++i)
            REQUIRE(std::fabs(le[i] - lm[i]) < 0.1 * std::fmax(1.0, std::fabs(le[i])));
    }
}

TEST_CASE("infinite-noise llrs collapse to label-count priors") {
    for (int N : {32, 20, 10}) {
        const Constellation c = design(32, N, 1.0, 2.0);
        const std::vector<double> l = llr_exact(0.31, c, 1e12);
        for (int i = 0; i < c.n_bits; ++i) {
            // both bit-level sets always hold M/2 label slots, so the prior
            // ratio is 1 and every LLR tends to 0
            double c0 = 0.0, c1 = 0.0;
            for (const double w : c.level_weights[i][0]) c0 += w;
            for (const double w : c.level_weights[i][1]) c1 += w;
            REQUIRE(l[i] == Catch::Approx(std::log(c0 / c1)).margin(1e-9));
            REQUIRE(c0 == Catch::Approx(16.0));
            REQUIRE(c1 == Catch::Approx(16.0));
        }
    }
}

TEST_CASE("demapping enumerates N distinct candidates, not M labels") {
    for (int N : {20, 10, 4}) {
        const Constellation c = design(32, N, 1.0, 2.0);
        REQUIRE(static_cast<int>(c.signed_points.size()) == N);
        for (int i = 0; i < c.n_bits; ++i) {
            for (int b = 0; b < 2; ++b) {
                // level sets index into the distinct points only
                for (int p : c.level_points[i][b]) {
                    REQUIRE(p >= 0);
                    REQUIRE(p < N);
                }
            }
        }
    }
}
