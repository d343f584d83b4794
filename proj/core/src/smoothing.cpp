#include "squant/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace squant {

SmoothingKind parse_smoothing_kind(std::string_view name) {
    if (name == "euclidean" || name == "l2") return SmoothingKind::euclidean;
    if (name == "kl") return SmoothingKind::kl;
    throw InvalidArgument("unknown smoothing kind: " + std::string(name));
}

std::string_view to_string(SmoothingKind kind) noexcept {
    switch (kind) {
    case SmoothingKind::euclidean: return "euclidean";
    case SmoothingKind::kl: return "kl";
    }
    return "unknown";
}

SmoothingSpec::SmoothingSpec(SmoothingKind kind, double nu) : kind_(kind), nu_(nu) {
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw InvalidArgument("smoothing parameter nu must be positive and finite");
    }
}

ScalarConjugate::ScalarConjugate(const SmoothingSpec& spec, std::size_t n, const TailSpec& tail)
    : kind_(spec.kind()), nu_(spec.nu()), inv_n_(1.0 / static_cast<double>(n)),
      cap_(tail.cap(n)) {
    switch (kind_) {
    case SmoothingKind::euclidean:
        lower_ = -nu_ * inv_n_;
        upper_ = nu_ * (cap_ - inv_n_);
        break;
    case SmoothingKind::kl:
        lower_ = -std::numeric_limits<double>::infinity();
        // d'(cap) = log(n cap) + 1 = 1 - log(1 - p)
        upper_ = nu_ * (1.0 - std::log1p(-tail.p()));
        break;
    }
}

double ScalarConjugate::derivative(double s) const noexcept {
    if (s >= upper_) return cap_;
    if (s <= lower_) return 0.0;
    switch (kind_) {
    case SmoothingKind::euclidean: return std::clamp(s / nu_ + inv_n_, 0.0, cap_);
    case SmoothingKind::kl: return std::min(cap_, std::exp(s / nu_ - 1.0) * inv_n_);
    }
    return 0.0;
}

double ScalarConjugate::value(double s) const noexcept {
    switch (kind_) {
    case SmoothingKind::euclidean: {
        if (s <= lower_) return -0.5 * nu_ * inv_n_ * inv_n_;
        if (s >= upper_) {
            const double gap = cap_ - inv_n_;
            return s * cap_ - 0.5 * nu_ * gap * gap;
        }
        // t - 1/n = s / nu on the interior branch
        const double t = s / nu_ + inv_n_;
        return s * t - 0.5 * s * s / nu_;
    }
    case SmoothingKind::kl: {
        if (s >= upper_) return cap_ * (s - nu_ * std::log(cap_ / inv_n_));
        return nu_ * std::exp(s / nu_ - 1.0) * inv_n_;
    }
    }
    return 0.0;
}

double divergence_term(SmoothingKind kind, double t, std::size_t n) {
    const double inv_n = 1.0 / static_cast<double>(n);
    switch (kind) {
    case SmoothingKind::euclidean: return 0.5 * (t - inv_n) * (t - inv_n);
    case SmoothingKind::kl: return t > 0.0 ? t * std::log(t / inv_n) : 0.0;
    }
    return 0.0;
}

double divergence(SmoothingKind kind, std::span<const double> q) {
    double total = 0.0;
    for (double t : q) total += divergence_term(kind, t, q.size());
    return total;
}

double max_divergence(SmoothingKind kind, std::size_t n, const TailSpec& tail) {
    // D is convex and permutation invariant, so any greedy vertex attains the max.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto q = greedy_capped_weights(order, tail.cap(n));
    return divergence(kind, q);
}

double g_nu(double s, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail) {
    return ScalarConjugate(spec, n, tail).value(s);
}

double g_nu_prime(double s, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail) {
    return ScalarConjugate(spec, n, tail).derivative(s);
}

std::vector<double> breakpoints(const EmpiricalSample& sample, const SmoothingSpec& spec,
                                const TailSpec& tail) {
    const ScalarConjugate g(spec, sample.size(), tail);
    std::vector<double> points;
    points.reserve(2 * sample.size());
    for (double u : sample.values()) {
        if (std::isfinite(g.lower_threshold())) points.push_back(u - g.lower_threshold());
        points.push_back(u - g.upper_threshold());
    }
    std::sort(points.begin(), points.end());
    return points;
}

double dual_objective(double eta, const EmpiricalSample& sample, const ScalarConjugate& g) {
    double total = 0.0;
    for (double u : sample.values()) total += g.value(u - eta);
    return eta + total;
}

double dual_slope(double eta, const EmpiricalSample& sample, const ScalarConjugate& g) {
    double mass = 0.0;
    for (double u : sample.values()) mass += g.derivative(u - eta);
    return 1.0 - mass;
}

namespace {

double solve_closed_form(const EmpiricalSample& sample, const SmoothingSpec& spec,
                         const TailSpec& tail, const ScalarConjugate& g) {
    const std::vector<double> points = breakpoints(sample, spec, tail);

    // First breakpoint with theta' > 0; theta' is monotone so this splits N.
    std::size_t first_positive = 0;
    {
        std::size_t lo = 0;
        std::size_t hi = points.size();
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (dual_slope(points[mid], sample, g) > 0.0) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        first_positive = lo;
    }

    // theta' is constant (all coordinates capped) left of the smallest
    // breakpoint, so a missing lower bracket can only come from rounding.
    if (first_positive == 0) return points.front();

    const double eta_lo = points[first_positive - 1];
    const double slope_lo = dual_slope(eta_lo, sample, g);
    if (slope_lo == 0.0) return eta_lo;

    const bool has_upper = first_positive < points.size();
    const double eta_hi = has_upper ? points[first_positive] : eta_lo;
    const double slope_hi = has_upper ? dual_slope(eta_hi, sample, g) : 0.0;
    if (has_upper && slope_hi == 0.0) return eta_hi;

    switch (spec.kind()) {
    case SmoothingKind::euclidean: {
        // theta' is affine between consecutive breakpoints
        const double eta = eta_lo - slope_lo * (eta_hi - eta_lo) / (slope_hi - slope_lo);
        return std::clamp(eta, eta_lo, eta_hi);
    }
    case SmoothingKind::kl: {
        // Coordinates whose breakpoint lies strictly right of eta_lo are
        // capped on the open bracket; the others follow the exponential branch.
        const double nu = spec.nu();
        const auto u = sample.values();
        const double shift = g.upper_threshold();
        std::size_t capped = 0;
        double top = -std::numeric_limits<double>::infinity();
        for (double v : u) {
            if (v - shift > eta_lo) {
                ++capped;
            } else {
                top = std::max(top, v / nu);
            }
        }
        double tail_sum = 0.0;
        for (double v : u) {
            if (!(v - shift > eta_lo)) tail_sum += std::exp(v / nu - top);
        }
        const double free_mass = 1.0 - static_cast<double>(capped) * g.cap();
        const double n = static_cast<double>(u.size());
        const double eta =
            nu * (top + std::log(tail_sum) - 1.0 - std::log(n) - std::log(free_mass));
        return has_upper ? std::clamp(eta, eta_lo, eta_hi) : std::max(eta, eta_lo);
    }
    }
    return eta_lo;
}

double solve_bisection(const EmpiricalSample& sample, const SmoothingSpec& spec,
                       const TailSpec& tail, const ScalarConjugate& g) {
    constexpr double slope_tol = 1e-12;
    constexpr int max_iter = 200;

    const std::vector<double> points = breakpoints(sample, spec, tail);
    double lo = points.front() - 1.0;
    double hi = points.back() + 1.0;
    double width = hi - lo;
    for (int k = 0; k < 64 && dual_slope(lo, sample, g) > 0.0; ++k, width *= 2.0) lo -= width;
    width = hi - lo;
    for (int k = 0; k < 64 && dual_slope(hi, sample, g) < 0.0; ++k, width *= 2.0) hi += width;

    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        const double slope = dual_slope(mid, sample, g);
        if (std::abs(slope) <= slope_tol) break;
        if (slope < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

} // namespace

DualScalarState solve_dual_1d(const EmpiricalSample& sample, const SmoothingSpec& spec,
                              const TailSpec& tail, DualMethod method) {
    const ScalarConjugate g(spec, sample.size(), tail);
    DualScalarState state;
    state.eta_star = method == DualMethod::closed_form ? solve_closed_form(sample, spec, tail, g)
                                                       : solve_bisection(sample, spec, tail, g);
    state.weights.q.reserve(sample.size());
    for (double u : sample.values()) state.weights.q.push_back(g.derivative(u - state.eta_star));
    state.theta_value = dual_objective(state.eta_star, sample, g);
    return state;
}

DualResult smoothed_superquantile(const EmpiricalSample& sample, const SmoothingSpec& spec,
                                  const TailSpec& tail) {
    DualScalarState state = solve_dual_1d(sample, spec, tail);
    return DualResult{state.theta_value, std::move(state.weights)};
}

double m_nu(double eta, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail) {
    const double nu = spec.nu();
    const double keep = 1.0 - tail.p();
    const double scale = static_cast<double>(n) * keep; // n(1-p)
    const double t = m_nu_prime(eta, spec, n, tail);
    switch (spec.kind()) {
    case SmoothingKind::euclidean: {
        // dt(t) = (t - (1-p))^2 / (2 n (1-p))
        const double gap = t - keep;
        return eta * t - nu * gap * gap / (2.0 * scale);
    }
    case SmoothingKind::kl: {
        // dt(t) = t log(t / (1-p))
        if (t >= 1.0) return eta + nu * std::log(keep);
        return nu * t;
    }
    }
    return 0.0;
}

double m_nu_prime(double eta, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail) {
    const double nu = spec.nu();
    const double keep = 1.0 - tail.p();
    switch (spec.kind()) {
    case SmoothingKind::euclidean: {
        const double scale = static_cast<double>(n) * keep;
        return std::clamp(keep + scale * eta / nu, 0.0, 1.0);
    }
    case SmoothingKind::kl: {
        if (eta >= nu * (1.0 - std::log(keep))) return 1.0;
        return std::min(1.0, keep * std::exp(eta / nu - 1.0));
    }
    }
    return 0.0;
}

MinFormResult smoothed_min_form(const EmpiricalSample& sample, const SmoothingSpec& spec,
                                const TailSpec& tail) {
    const auto u = sample.values();
    const std::size_t n = u.size();
    const double weight = tail.cap(n);
    auto slope = [&](double eta) {
        double mass = 0.0;
        for (double v : u) mass += m_nu_prime(v - eta, spec, n, tail);
        return 1.0 - weight * mass;
    };
    auto objective = [&](double eta) {
        double total = 0.0;
        for (double v : u) total += m_nu(v - eta, spec, n, tail);
        return eta + weight * total;
    };

    const auto [min_it, max_it] = std::minmax_element(u.begin(), u.end());
    double lo = *min_it - spec.nu() - 1.0;
    double hi = *max_it + spec.nu() + 1.0;
    double width = hi - lo;
    for (int k = 0; k < 64 && slope(lo) > 0.0; ++k, width *= 2.0) lo -= width;
    width = hi - lo;
    for (int k = 0; k < 64 && slope(hi) < 0.0; ++k, width *= 2.0) hi += width;

    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        if (slope(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double eta = 0.5 * (lo + hi);
    return MinFormResult{objective(eta), eta};
}

} // namespace squant
