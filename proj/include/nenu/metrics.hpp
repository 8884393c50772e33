#pragma once

// Bit-wise mutual information of a PAM constellation: Gauss-Hermite
// quadrature for the AWGN channel, an LLR-based Monte-Carlo estimator for
// channels with residual distortion, and the (N, rho) grid optimizer.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nenu/parallel.hpp"
#include "nenu/receiver.hpp"
#include "nenu/rng.hpp"
#include "nenu/shaping.hpp"
#include "nenu/special.hpp"
#include "nenu/types.hpp"

namespace nenu {

enum class BmiMethod { Ghq, MonteCarlo };

struct BmiEstimate {
    double value = 0.0;     // bits per dimension
    double std_error = 0.0; // 0 for GHQ
    long samples = 0;       // observations for MC, quadrature order for GHQ
    BmiMethod method = BmiMethod::Ghq;
};

// Entropy of the signed point distribution, an upper bound on the BMI.
inline double point_entropy(const Constellation& c) {
    double h = 0.0;
    for (double p : c.signed_point_prob)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

// Total BMI over AWGN by Gauss-Hermite quadrature. The outer expectation
// runs over all M label slots, so merged amplitudes enter once per label;
// that is exactly the non-equiprobable weighting. snr_db is gamma = Es/N0.
inline BmiEstimate bmi_awgn_ghq(const Constellation& c, double snr_db, int nodes = 64) {
    if (nodes < 16) throw std::invalid_argument("bmi_awgn_ghq: nodes must be >= 16");
    const GaussHermite gh = gauss_hermite(nodes);
    const double gamma = std::pow(10.0, snr_db / 10.0);
    const double n0 = c.Es / gamma;
    const double sigma = std::sqrt(n0);
    const int M = c.M;
    const int n = c.n_bits;

    // stable per-set log-sum-exp of exp(-(y - x)^2 / N0) over label slots
    std::vector<double> d(M);
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
        const double x0 = c.amp_by_label[m];
        for (int j = 0; j < nodes; ++j) {
            const double y = x0 + sigma * gh.nodes[j];
            double dmax_all = -1e300;
            for (int l = 0; l < M; ++l) {
                d[l] = -(y - c.amp_by_label[l]) * (y - c.amp_by_label[l]) / n0;
                if (d[l] > dmax_all) dmax_all = d[l];
            }
            double s_all = 0.0;
            for (int l = 0; l < M; ++l) s_all += std::exp(d[l] - dmax_all);
            const double lse_all = dmax_all + std::log(s_all);

            double term = 0.0;
            for (int i = 0; i < n; ++i) {
                const int b = (m >> (n - 1 - i)) & 1;
                double dmax = -1e300;
                for (int l = 0; l < M; ++l)
                    if (((l >> (n - 1 - i)) & 1) == b && d[l] > dmax) dmax = d[l];
                double s_b = 0.0;
                for (int l = 0; l < M; ++l)
                    if (((l >> (n - 1 - i)) & 1) == b) s_b += std::exp(d[l] - dmax);
                term += lse_all - (dmax + std::log(s_b));
            }
            total += gh.weights[j] * term;
        }
    }
    BmiEstimate est;
    est.value = n - total / (M * std::sqrt(kPi)) / std::log(2.0);
    est.std_error = 0.0;
    est.samples = nodes;
    est.method = BmiMethod::Ghq;
    return est;
}

// One per-dimension observation: the transmitted label slot, the received
// (equalized, gain-normalized) real value, and the effective complex-domain
// noise variance the Gaussian metric should assume for it.
struct DimObservation {
    uint32_t label = 0;
    double y = 0.0;
    double n0_eff = 0.0;
};

// Monte-Carlo BMI from per-bit LLR information with a Gaussian (possibly
// mismatched) metric: value = mean over observations of
//   n - sum_i log2(1 + exp(-(1-2 b_i) L_i)).
// On a matched AWGN channel this converges to the GHQ value.
inline BmiEstimate bmi_monte_carlo(std::span<const DimObservation> obs, const Constellation& c) {
    if (obs.size() < 2) throw std::invalid_argument("bmi_monte_carlo: empty observation stream");
    const int n = c.n_bits;
    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> llrs(n);
    for (const auto& o : obs) {
        llr_exact(o.y, c, o.n0_eff, llrs);
        double v = n;
        for (int i = 0; i < n; ++i) {
            const double s = (1.0 - 2.0 * c.bit_of(o.label, i)) * llrs[i];
            // log2(1 + e^{-s}) without overflow
            v -= (std::log1p(std::exp(-std::fabs(s))) + std::fmax(-s, 0.0)) / std::log(2.0);
        }
        sum += v;
        sum_sq += v * v;
    }
    const double k = static_cast<double>(obs.size());
    BmiEstimate est;
    est.value = sum / k;
    est.std_error = std::sqrt(std::fmax(0.0, (sum_sq / k - est.value * est.value) / (k - 1.0)));
    est.samples = static_cast<long>(obs.size());
    est.method = BmiMethod::MonteCarlo;
    return est;
}

inline BmiEstimate bmi_monte_carlo(std::span<const uint32_t> labels, std::span<const double> ys,
                                   const Constellation& c, double n0_eff) {
    if (labels.size() != ys.size()) throw std::invalid_argument("bmi_monte_carlo: size mismatch");
    std::vector<DimObservation> obs(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) obs[i] = {labels[i], ys[i], n0_eff};
    return bmi_monte_carlo(obs, c);
}

// Loss from the Shannon limit in bits per 2D symbol: log2(1+gamma) - 2 C.
inline double shannon_loss(const Constellation& c, double snr_db, int nodes = 64) {
    const double gamma = std::pow(10.0, snr_db / 10.0);
    return std::log2(1.0 + gamma) - 2.0 * bmi_awgn_ghq(c, snr_db, nodes).value;
}

// ---- (N, rho) grid optimization -----------------------------------------

struct GridCell {
    int N = 0;
    double rho = 0.0;
    BmiEstimate bmi;
};

struct OptimizationResult {
    int best_N = 0;
    double best_rho = 0.0;
    BmiEstimate best_bmi;
    std::vector<GridCell> grid;     // every evaluated cell, sorted by (N, rho)
    bool two_stage = false;         // coarse rho 0.05 pass + 0.01 refinement
    long budget_per_cell = 0;       // MC observations per cell (0 for GHQ)
};

// Evaluates a constellation at one grid cell; the seed is derived per cell
// so evaluation order and parallelism cannot change any result.
using CellEvaluator = std::function<BmiEstimate(const Constellation&, double snr_db, uint64_t seed)>;

inline CellEvaluator ghq_evaluator(int nodes = 64) {
    return [nodes](const Constellation& c, double snr_db, uint64_t) { return bmi_awgn_ghq(c, snr_db, nodes); };
}

struct OptimizeOptions {
    double Es = 2.0;
    bool two_stage = false;   // use for Monte-Carlo evaluators
    uint64_t seed = 1;
    long budget_per_cell = 0; // informational, recorded in the result
    unsigned threads = 0;
};

inline OptimizationResult optimize_params(int M, double snr_db, const CellEvaluator& eval,
                                          const OptimizeOptions& opts = {}) {
    if (!is_pow2_int(M) || M < 4) throw std::invalid_argument("optimize_params: bad M");

    auto run_cells = [&](const std::vector<std::pair<int, int>>& cells /* (N, rho*100) */) {
        std::vector<GridCell> out(cells.size());
        parallel_for(
            cells.size(),
            [&](size_t idx) {
                const auto [N, r100] = cells[idx];
                const double rho = r100 / 100.0;
                try {
                    const Constellation c = design(M, N, rho, opts.Es);
                    const uint64_t cell_seed =
                        derive_seed(opts.seed, {static_cast<uint64_t>(N), static_cast<uint64_t>(r100)});
                    out[idx] = {N, rho, eval(c, snr_db, cell_seed)};
                } catch (const std::exception& e) {
                    throw std::runtime_error("optimize_params: cell N=" + std::to_string(N) +
                                             " rho=" + std::to_string(rho) + ": " + e.what());
                }
            },
            opts.threads);
        return out;
    };

    const int rho_step = opts.two_stage ? 5 : 1;
    std::vector<std::pair<int, int>> cells;
    for (int N = 2; N <= M; N += 2) {
        for (int r = 0; r <= 100; r += rho_step) {
            if (r == 0 && N != M) continue; // rho = 0 is uniform M-PAM, only defined at N = M
            cells.emplace_back(N, r);
        }
    }
    std::vector<GridCell> grid = run_cells(cells);

    auto best_of = [](const std::vector<GridCell>& g) {
        size_t bi = 0;
        for (size_t i = 1; i < g.size(); ++i)
            if (g[i].bmi.value > g[bi].bmi.value) bi = i;
        return bi;
    };

    if (opts.two_stage) {
        const GridCell& coarse_best = grid[best_of(grid)];
        const int r0 = static_cast<int>(std::lround(coarse_best.rho * 100.0));
        std::vector<std::pair<int, int>> refine;
        for (int N = coarse_best.N - 2; N <= coarse_best.N + 2; N += 2) {
            if (N < 2 || N > M) continue;
            for (int r = std::max(1, r0 - 5); r <= std::min(100, r0 + 5); ++r) {
                if (r % 5 == 0 && N == coarse_best.N) continue; // already in the coarse pass
                bool evaluated = false;
                for (const auto& g : grid)
                    if (g.N == N && std::lround(g.rho * 100.0) == r) evaluated = true;
                if (!evaluated) refine.emplace_back(N, r);
            }
        }
        std::vector<GridCell> refined = run_cells(refine);
        grid.insert(grid.end(), refined.begin(), refined.end());
    }

    std::sort(grid.begin(), grid.end(), [](const GridCell& a, const GridCell& b) {
        return a.N != b.N ? a.N < b.N : a.rho < b.rho;
    });
    OptimizationResult res;
    const size_t bi = best_of(grid);
    res.best_N = grid[bi].N;
    res.best_rho = grid[bi].rho;
    res.best_bmi = grid[bi].bmi;
    res.grid = std::move(grid);
    res.two_stage = opts.two_stage;
    res.budget_per_cell = opts.budget_per_cell;
    return res;
}

} // namespace nenu
