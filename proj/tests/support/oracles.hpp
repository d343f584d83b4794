#pragma once

// Independent reference computations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "squant/rng.hpp"

namespace squant::testing {

/// max q^T u over {0 <= q <= cap, sum q = 1} by enumerating the vertices:
/// every coordinate at a bound except at most one.
inline double knapsack_brute_force(std::span<const double> u, double cap) {
    const std::size_t n = u.size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double base = 0.0;
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) {
                base += cap * u[i];
                ++used;
            }
        }
        const double rest = 1.0 - static_cast<double>(used) * cap;
        if (std::abs(rest) <= 1e-12) best = std::max(best, base);
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (std::size_t{1} << j)) continue;
            if (rest >= -1e-12 && rest <= cap + 1e-12) best = std::max(best, base + rest * u[j]);
        }
    }
    return best;
}

/// Finds tau with sum_i clip(f(v_i - tau)) = 1 by bisection and returns the weights.
inline std::vector<double> solve_mass_equation(std::span<const double> v,
                                               const std::function<double(double)>& weight) {
    double lo = *std::min_element(v.begin(), v.end()) - 1.0;
    double hi = *std::max_element(v.begin(), v.end()) + 1.0;
    auto mass = [&](double tau) {
        double m = 0.0;
        for (double x : v) m += weight(x - tau);
        return m;
    };
    while (mass(lo) < 1.0) lo -= 2.0 * (hi - lo);
    while (mass(hi) > 1.0) hi += 2.0 * (hi - lo);
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        (mass(mid) > 1.0 ? lo : hi) = mid;
    }
    const double tau = 0.5 * (lo + hi);
    std::vector<double> q;
    for (double x : v) q.push_back(weight(x - tau));
    return q;
}

/// Euclidean projection of v onto the capped simplex.
inline std::vector<double> project_capped_simplex(std::span<const double> v, double cap) {
    return solve_mass_equation(v, [cap](double s) { return std::clamp(s, 0.0, cap); });
}

/// argmax q^T u - nu sum q_i log(n q_i) over the capped simplex:
/// q_i = min(cap, c exp(u_i / nu)) for the normalizing c.
inline std::vector<double> kl_argmax(std::span<const double> u, double nu, double cap) {
    std::vector<double> scaled(u.begin(), u.end());
    for (double& x : scaled) x /= nu;
    return solve_mass_equation(scaled, [cap](double s) {
        return std::min(cap, std::exp(std::min(s, 700.0)));
    });
}

/// Dense grid maximum of phi over [a, b].
inline double grid_max(const std::function<double(double)>& phi, double a, double b,
                       std::size_t points = 200001) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < points; ++k) {
        const double t = a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1);
        best = std::max(best, phi(t));
    }
    return best;
}

inline std::vector<double> random_values(Rng& rng, std::size_t n, double scale = 10.0) {
    std::vector<double> u(n);
    for (double& x : u) x = scale * rng.normal();
    return u;
}

/// Values with deliberate ties: drawn from a small integer grid.
inline std::vector<double> random_tied_values(Rng& rng, std::size_t n, std::size_t levels = 4) {
    std::vector<double> u(n);
    for (double& x : u) x = static_cast<double>(rng.index(levels));
    return u;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace squant::testing
