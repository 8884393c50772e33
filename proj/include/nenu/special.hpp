#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "nenu/types.hpp"

namespace nenu {

// Inverse error function. Polynomial initial guess (Giles-style, ~1e-7)
// refined by Newton iterations on the residual written as
// (1-x) - erfc(t), which stays well conditioned for x near 1.
// Converges to ~1e-15 relative in 2-3 steps.
inline double erf_inv(double x) {
    if (!(x > -1.0 && x < 1.0)) throw std::invalid_argument("erf_inv: |x| must be < 1");
    if (x == 0.0) return 0.0;
    const double sign = x < 0.0 ? -1.0 : 1.0;
    const double ax = std::fabs(x);

    double w = -std::log((1.0 - ax) * (1.0 + ax));
    double t;
    if (w < 5.0) {
        w -= 2.5;
        double p = 2.81022636e-08;
        p = 3.43273939e-07 + p * w;
        p = -3.5233877e-06 + p * w;
        p = -4.39150654e-06 + p * w;
        p = 0.00021858087 + p * w;
        p = -0.00125372503 + p * w;
        p = -0.00417768164 + p * w;
        p = 0.246640727 + p * w;
        p = 1.50140941 + p * w;
        t = p * ax;
    } else {
        w = std::sqrt(w) - 3.0;
        double p = -0.000200214257;
        p = 0.000100950558 + p * w;
        p = 0.00134934322 + p * w;
        p = -0.00367342844 + p * w;
        p = 0.00573950773 + p * w;
        p = -0.0076224613 + p * w;
        p = 0.00943887047 + p * w;
        p = 1.00167406 + p * w;
        p = 2.83297682 + p * w;
        t = p * ax;
    }
    const double half_sqrt_pi = 0.8862269254527580137;
    for (int it = 0; it < 8; ++it) {
        const double resid = (1.0 - ax) - std::erfc(t);
        const double step = resid * half_sqrt_pi * std::exp(t * t);
        t -= step;
        if (std::fabs(step) <= 1e-13 * std::fmax(1.0, std::fabs(t))) break;
    }
    return sign * t;
}

struct GaussHermite {
    dvec nodes;   // descending |t|: nodes[0] largest positive, mirrored tail
    dvec weights; // for integrands against exp(-t^2)
};

// Physicists' Gauss-Hermite rule: sum_i w_i f(t_i) ~ integral f(t) e^{-t^2} dt.
// Newton iteration on the orthonormal Hermite recurrence (stable to n ~ 150).
inline GaussHermite gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1");
    GaussHermite gh;
    gh.nodes.assign(n, 0.0);
    gh.weights.assign(n, 0.0);
    const double pim4 = 0.7511255444649425; // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0, z_prev1 = 0.0, z_prev2 = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * z_prev2;
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * z_prev2;
        } else {
            z = 2.0 * z - z_prev2;
        }
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) <= 3e-14) break;
        }
        gh.nodes[i] = z;
        gh.nodes[n - 1 - i] = -z;
        gh.weights[i] = 2.0 / (pp * pp);
        gh.weights[n - 1 - i] = gh.weights[i];
        z_prev2 = z_prev1;
        z_prev1 = z;
    }
    if (n % 2 == 1) gh.nodes[m - 1] = 0.0;
    return gh;
}

} // namespace nenu
