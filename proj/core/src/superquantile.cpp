#include "squant/superquantile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace squant {

EmpiricalSample::EmpiricalSample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("empty sample");
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidArgument("non-finite sample value");
    }
}

TailSpec::TailSpec(double p) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("tail probability p must lie in [0, 1)");
}

namespace {

// Number of order statistics needed to reach CDF weight p: max(1, ceil(n p)).
std::size_t quantile_rank(std::size_t n, double p) {
    const double np = static_cast<double>(n) * p;
    auto k = static_cast<std::size_t>(std::ceil(np));
    return std::clamp<std::size_t>(k, 1, n);
}

} // namespace

double quantile(const EmpiricalSample& sample, const TailSpec& tail) {
    std::vector<double> scratch(sample.values().begin(), sample.values().end());
    const std::size_t k = quantile_rank(scratch.size(), tail.p());
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(scratch.begin(), nth, scratch.end());
    return *nth;
}

TailSplit tail_split(const EmpiricalSample& sample, const TailSpec& tail) {
    TailSplit split;
    split.quantile = quantile(sample, tail);
    const auto u = sample.values();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > split.quantile) {
            split.above.push_back(i);
        } else if (u[i] == split.quantile) {
            split.equal.push_back(i);
        }
    }
    const double n = static_cast<double>(u.size());
    // Rounding can leave a -1e-17 residue when p sits exactly on a CDF jump.
    split.delta = std::max(0.0, (n - static_cast<double>(split.above.size())) / n - tail.p());
    return split;
}

double superquantile_integral(const EmpiricalSample& sample, const TailSpec& tail) {
    const TailSplit split = tail_split(sample, tail);
    const auto u = sample.values();
    double tail_sum = 0.0;
    for (std::size_t i : split.above) tail_sum += u[i];
    const double one_minus_p = 1.0 - tail.p();
    return tail_sum * tail.cap(u.size()) + split.delta / one_minus_p * split.quantile;
}

std::vector<double> greedy_capped_weights(std::span<const std::size_t> order, double cap) {
    std::vector<double> q(order.size(), 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) {
        // Remaining budget from the count, not by accumulation, so that
        // integral n(1-p) leaves exactly zero.
        const double remaining = 1.0 - static_cast<double>(k) * cap;
        if (remaining <= 0.0) break;
        q[order[k]] = std::min(cap, remaining);
    }
    return q;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

DualResult superquantile_dual(const EmpiricalSample& sample, const TailSpec& tail) {
    const auto u = sample.values();
    std::vector<std::size_t> order(u.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });

    DualResult result;
    result.weights.q = greedy_capped_weights(order, tail.cap(u.size()));
    result.value = dot(result.weights.q, u);
    return result;
}

VariationalResult superquantile_variational(const EmpiricalSample& sample,
                                            const TailSpec& tail) {
    const auto u = sample.values();
    VariationalResult result;
    result.eta = quantile(sample, tail);
    double excess = 0.0;
    for (double v : u) excess += std::max(v - result.eta, 0.0);
    result.value = result.eta + excess * tail.cap(u.size());
    return result;
}

} // namespace squant
