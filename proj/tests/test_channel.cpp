#include <catch_amalgamated.hpp>

#include <cmath>

#include "nenu/channel.hpp"

using namespace nenu;

TEST_CASE("awgn_apply") {
    cvec u(1024, cd{0.5, -0.25});

    // N0 = 0 is the identity
    const cvec clean = awgn_apply(u, 0.0, 42);
    for (size_t i = 0; i < u.size(); ++i) REQUIRE(clean[i] == u[i]);

    // noise statistics: empirical variance 1.0 +- 0.02 over 1e5 samples
    cvec zeros(100000, cd{});
    const cvec noisy = awgn_apply(zeros, 1.0, 7);
    double var = 0.0;
    for (const auto& v : noisy) var += std::norm(v);
    var /= static_cast<double>(noisy.size());
    REQUIRE(var == Catch::Approx(1.0).margin(0.02));

    // fixed seed: bit-identical repeat
    const cvec a = awgn_apply(u, 0.3, 1234);
    const cvec b = awgn_apply(u, 0.3, 1234);
    for (size_t i = 0; i < u.size(); ++i) REQUIRE(a[i] == b[i]);
    const cvec c = awgn_apply(u, 0.3, 1235);
    bool differs = false;
    for (size_t i = 0; i < u.size(); ++i)
        if (a[i] != c[i]) differs = true;
    REQUIRE(differs);

    REQUIRE_THROWS_AS(awgn_apply(u, -0.1, 1), std::invalid_argument);
}

TEST_CASE("rayleigh_realize") {
    // flat fading: a single path gives constant |H_k|
    const ChannelRealization flat = rayleigh_realize(1, 64, 5);
    for (const auto& h : flat.h) REQUIRE(std::abs(h) == Catch::Approx(std::abs(flat.h[0])).epsilon(1e-12));

    // unit average energy over an ensemble
    double acc = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        const ChannelRealization ch = rayleigh_realize(4, 16, derive_seed(99, {static_cast<uint64_t>(r)}));
        double e = 0.0;
        for (const auto& h : ch.h) e += std::norm(h);
        acc += e / 16.0;
    }
    REQUIRE(acc / reps == Catch::Approx(1.0).margin(0.02));

    // frequency correlation matches the L-tap oracle:
    // E[H_k H_{k+d}^*] = (1/L) sum_l exp(-j 2 pi d l / Nc)
    const int nc = 64, L = 4, reps2 = 20000;
    for (int d : {1, 8, 16}) {
        cd num{0.0, 0.0};
        for (int r = 0; r < reps2; ++r) {
            const ChannelRealization ch = rayleigh_realize(L, nc, derive_seed(7, {static_cast<uint64_t>(r)}));
            for (int k = 0; k < nc; ++k) num += ch.h[k] * std::conj(ch.h[(k + d) % nc]);
        }
        num /= static_cast<double>(reps2) * nc;
        cd expect{0.0, 0.0};
        for (int l = 0; l < L; ++l) {
            const double ang = 2.0 * kPi * d * l / nc;
            expect += cd{std::cos(ang), std::sin(ang)};
        }
        expect /= static_cast<double>(L);
        REQUIRE(std::abs(num - expect) < 0.02);
    }

    REQUIRE_THROWS_AS(rayleigh_realize(0, 64, 1), std::invalid_argument);
}

TEST_CASE("fading_apply and zf_equalize") {
    ChannelRealization ch = rayleigh_realize(4, 256, 11);
    cvec u(256);
    for (size_t k = 0; k < u.size(); ++k) u[k] = {std::cos(0.1 * k), std::sin(0.05 * k)};

    // noiseless: ZF recovers the input exactly
    ch.n0 = 0.0;
    const cvec y = fading_apply(u, ch, 3);
    const cvec eq = zf_equalize(y, ch);
    for (size_t k = 0; k < u.size(); ++k) REQUIRE(std::abs(eq[k] - u[k]) < 1e-12);

    // deterministic given seed
    ch.n0 = 0.2;
    const cvec y1 = fading_apply(u, ch, 17);
    const cvec y2 = fading_apply(u, ch, 17);
    for (size_t k = 0; k < u.size(); ++k) REQUIRE(y1[k] == y2[k]);

    // energy bookkeeping: E|Y|^2 = E|H|^2 E|U|^2 + N0
    double ey = 0.0, eu = 0.0, eh = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        ChannelRealization c2 = rayleigh_realize(4, 64, derive_seed(13, {static_cast<uint64_t>(r)}));
        c2.n0 = 0.5;
        cvec x(64, cd{1.0, 0.0});
        const cvec yr = fading_apply(x, c2, derive_seed(14, {static_cast<uint64_t>(r)}));
        for (int k = 0; k < 64; ++k) {
            ey += std::norm(yr[k]);
            eh += std::norm(c2.h[k]);
            eu += 1.0;
        }
    }
    REQUIRE(ey / eu == Catch::Approx(eh / eu + 0.5).margin(0.03));

    // flat H = 2 halves the symbols
    ChannelRealization two;
    two.h.assign(8, cd{2.0, 0.0});
    two.n0 = 0.0;
    const cvec y3 = fading_apply(cvec(8, cd{1.0, 1.0}), two, 1);
    const cvec eq3 = zf_equalize(y3, two);
    for (const auto& v : eq3) REQUIRE(std::abs(v - cd{1.0, 1.0}) < 1e-12);
}

TEST_CASE("mmse_equalize") {
    // flat channel: scalar gain, no ISI; converges to ZF as snr -> inf
    ChannelRealization flat;
    flat.h.assign(64, cd{0.8, 0.6});
    cvec z(64);
    for (size_t k = 0; k < z.size(); ++k) z[k] = {std::cos(0.3 * k), std::sin(0.2 * k)};
    const cvec v = dft_precode(z);
    cvec y(64);
    for (int k = 0; k < 64; ++k) y[k] = flat.h[k] * v[k];

    const cvec high = mmse_equalize(y, flat, 1e12);
    for (int k = 0; k < 64; ++k) REQUIRE(std::abs(high[k] - z[k]) < 1e-6);

    const cvec mid = mmse_equalize(y, flat, 10.0);
    // flat channel: output is a common scalar times the input
    const cd g = mid[0] / z[0];
    for (int k = 0; k < 64; ++k) REQUIRE(std::abs(mid[k] - g * z[k]) < 1e-9);

    // frequency-selective channel at finite snr leaves residual ISI
    const ChannelRealization sel = rayleigh_realize(4, 64, 23);
    cvec ys(64);
    for (int k = 0; k < 64; ++k) ys[k] = sel.h[k] * v[k];
    const cvec est = mmse_equalize(ys, sel, 10.0);
    double err = 0.0;
    for (int k = 0; k < 64; ++k) err += std::norm(est[k] - z[k]);
    REQUIRE(err > 1e-4);

    REQUIRE_THROWS_AS(mmse_equalize(y, flat, 0.0), std::invalid_argument);
}
