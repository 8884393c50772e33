#include <catch_amalgamated.hpp>

#include <cmath>

#include "nenu/metrics.hpp"
#include "nenu/rng.hpp"

using namespace nenu;

namespace {

// Numerical-integration oracle for the AWGN BMI: trapezoid rule on a dense
// grid, independent of the Gauss-Hermite path under test.
double bmi_trapezoid(const Constellation& c, double snr_db, int grid = 200001, double span = 8.0) {
    const double gamma = std::pow(10.0, snr_db / 10.0);
    const double n0 = c.Es / gamma;
    const int M = c.M, n = c.n_bits;
    const double lo = -span, hi = span;
    const double dy = (hi - lo) / (grid - 1);
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
        const double x0 = c.amp_by_label[m];
        for (int g = 0; g < grid; ++g) {
            const double y = lo + g * dy;
            const double p = std::exp(-(y - x0) * (y - x0) / n0) / std::sqrt(kPi * n0);
            if (p < 1e-8) continue;
            double s_all = 0.0;
            double s_b[8] = {0};
            for (int l = 0; l < M; ++l) {
                const double e = std::exp(-(y - c.amp_by_label[l]) * (y - c.amp_by_label[l]) / n0);
                s_all += e;
                for (int i = 0; i < n; ++i)
                    if (((l >> (n - 1 - i)) & 1) == ((m >> (n - 1 - i)) & 1)) s_b[i] += e;
            }
            double term = 0.0;
            for (int i = 0; i < n; ++i) term += std::log2(s_all / s_b[i]);
            const double w = (g == 0 || g == grid - 1) ? 0.5 : 1.0;
            total += w * p * term * dy;
        }
    }
    return n - total / M;
}

} // namespace

TEST_CASE("ghq bmi matches the integration oracle for uniform 4-PAM") {
    const Constellation c = design(4, 4, 0.0, 2.0);
    const double ghq = bmi_awgn_ghq(c, 10.0).value;
    const double oracle = bmi_trapezoid(c, 10.0);
    REQUIRE(std::fabs(ghq - oracle) < 1e-3);
    REQUIRE(ghq == Catch::Approx(1.58179).margin(2e-4)); // frozen from the oracle
}

TEST_CASE("bpsk saturates to 1 bit per dimension") {
    const Constellation bpsk = design(32, 2, 1.0, 2.0);
    REQUIRE(bmi_awgn_ghq(bpsk, 15.0).value >= 0.999);
    REQUIRE(bmi_awgn_ghq(bpsk, 30.0).value == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("shaped 32-PAM beats uniform at 26 dB") {
    const Constellation uni = design(32, 32, 0.0, 2.0);
    const Constellation shaped = design(32, 32, 0.88, 2.0);
    const double bu = bmi_awgn_ghq(uni, 26.0).value;
    const double bs = bmi_awgn_ghq(shaped, 26.0).value;
    REQUIRE(bu > 4.0);
    REQUIRE(bu < 5.0);
    REQUIRE(bs > bu);
}

TEST_CASE("ghq converges in the node count") {
    const Constellation c = design(32, 20, 0.9, 2.0);
    for (double snr : {10.0, 25.0, 40.0}) {
        const double v64 = bmi_awgn_ghq(c, snr, 64).value;
        const double v128 = bmi_awgn_ghq(c, snr, 128).value;
        REQUIRE(std::fabs(v64 - v128) < 1e-6);
    }
    REQUIRE_THROWS_AS(bmi_awgn_ghq(c, 20.0, 8), std::invalid_argument);
}

TEST_CASE("bmi is monotone in snr and bounded") {
    const Constellation c = design(32, 24, 0.93, 2.0);
    const double h = point_entropy(c);
    double prev = 0.0;
    for (int snr = 0; snr <= 35; ++snr) {
        const double v = bmi_awgn_ghq(c, snr).value;
        REQUIRE(v >= prev - 1e-9);
        REQUIRE(v <= c.n_bits + 1e-9);
        REQUIRE(v <= h + 1e-9);
        prev = v;
    }
}

TEST_CASE("bmi bounds hold on random designs") {
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        const int N = 2 * (1 + static_cast<int>(rng.below(16)));
        const double rho = 0.01 + 0.99 * rng.u01();
        const double snr = 40.0 * rng.u01();
        const Constellation c = design(32, N, rho, 2.0);
        const double v = bmi_awgn_ghq(c, snr, 64).value;
        REQUIRE(v >= -1e-9);
        REQUIRE(v <= std::min(static_cast<double>(c.n_bits), point_entropy(c)) + 1e-9);
    }
}

TEST_CASE("shannon loss behaviour") {
    const Constellation c = design(32, 32, 0.88, 2.0);
    REQUIRE(std::fabs(shannon_loss(c, -30.0)) < 1e-3); // both terms vanish
    const Constellation uni = design(32, 32, 0.0, 2.0);
    REQUIRE(shannon_loss(c, 26.0) < shannon_loss(uni, 26.0));
    // frozen against an independent high-precision evaluation
    REQUIRE(shannon_loss(c, 26.0) == Catch::Approx(0.27930693).margin(1e-5));
}

TEST_CASE("monte carlo estimator on a matched awgn channel") {
    const Constellation c = design(4, 4, 0.0, 2.0);
    const double gamma = std::pow(10.0, 1.0);
    const double n0 = c.Es / gamma;
    Rng rng(123);
    const long K = 200000;
    std::vector<DimObservation> obs(K);
    for (long i = 0; i < K; ++i) {
        const uint32_t lab = static_cast<uint32_t>(rng.below(4));
        const double y = c.amp_by_label[lab] + std::sqrt(n0 / 2.0) * rng.gauss();
        obs[i] = {lab, y, n0};
    }
    const BmiEstimate mc = bmi_monte_carlo(obs, c);
    const BmiEstimate ghq = bmi_awgn_ghq(c, 10.0);
    REQUIRE(std::fabs(mc.value - ghq.value) < 3.0 * mc.std_error);
    REQUIRE(mc.std_error > 0.0);
    REQUIRE(mc.samples == K);
}

TEST_CASE("monte carlo estimator at zero noise reaches n bits") {
    const Constellation c = design(32, 32, 0.88, 2.0);
    Rng rng(5);
    std::vector<DimObservation> obs(20000);
    for (auto& o : obs) {
        const uint32_t lab = static_cast<uint32_t>(rng.below(32));
        o = {lab, c.amp_by_label[lab], 1e-8};
    }
    REQUIRE(bmi_monte_carlo(obs, c).value == Catch::Approx(5.0).margin(1e-6));
    REQUIRE_THROWS_AS(bmi_monte_carlo(std::vector<DimObservation>{}, c), std::invalid_argument);
}

TEST_CASE("ghq optimizer finds small constellations at low snr") {
    const OptimizationResult res = optimize_params(32, 5.0, ghq_evaluator(32));
    REQUIRE(res.best_N <= 8);
    REQUIRE(res.grid.size() > 1500); // exhaustive grid: 16 N values x 100 rho values + uniform cell
    for (const auto& cell : res.grid) {
        REQUIRE(cell.N % 2 == 0);
        REQUIRE(cell.N >= 2);
        REQUIRE(cell.N <= 32);
    }
}

TEST_CASE("optimal N grows with snr") {
    std::vector<int> best;
    for (double snr : {10.0, 18.0, 26.0}) {
        OptimizeOptions oo;
        oo.threads = 2;
        best.push_back(optimize_params(16, snr, ghq_evaluator(48), oo).best_N);
    }
    REQUIRE(best[0] <= best[1]);
    REQUIRE(best[1] <= best[2]);
    REQUIRE(best.back() == 16);
}

TEST_CASE("optimized designs never lose to the best uniform qam") {
    OptimizeOptions oo;
    oo.threads = 2;
    for (double snr : {8.0, 16.0, 26.0}) {
        const double gamma = std::pow(10.0, snr / 10.0);
        const double opt_loss =
            std::log2(1.0 + gamma) - 2.0 * optimize_params(32, snr, ghq_evaluator(48), oo).best_bmi.value;
        double best_uniform = 1e300;
        for (int m : {2, 4, 8, 16, 32}) {
            const Constellation u = m == 2 ? design(32, 2, 1.0, 2.0) : design(m, m, 0.0, 2.0);
            best_uniform = std::min(best_uniform, shannon_loss(u, snr, 48));
        }
        // small slack: the rho grid only approaches exact uniform spacing
        REQUIRE(opt_loss <= best_uniform + 0.02);
    }
}

TEST_CASE("optimizer reports failures with the cell identified") {
    CellEvaluator broken = [](const Constellation&, double, uint64_t) -> BmiEstimate {
        throw std::runtime_error("evaluator exploded");
    };
    try {
        optimize_params(4, 10.0, broken);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("N=") != std::string::npos);
        REQUIRE(msg.find("rho=") != std::string::npos);
    }
}
