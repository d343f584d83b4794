#include "squant/oracles.hpp"

#include <cmath>

namespace squant {

std::vector<double> SubdifferentialDescription::element(std::span<const double> lambda) const {
    if (lambda.size() != extreme_gradients.size()) {
        throw InvalidArgument("convex weights must match the number of tied gradients");
    }
    std::vector<double> g = fixed_part;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += hull_weight * lambda[k] * extreme_gradients[k][j];
        }
    }
    return g;
}

SubdifferentialDescription subdifferential(const LossMap& loss_map, std::span<const double> w,
                                           const TailSpec& tail) {
    const EmpiricalSample sample(loss_map.eval(w));
    const std::size_t n = sample.size();

    SubdifferentialDescription out;
    out.split = tail_split(sample, tail);
    out.hull_weight = out.split.delta / (1.0 - tail.p());

    std::vector<double> indicator(n, 0.0);
    const double cap = tail.cap(n);
    double tail_sum = 0.0;
    for (std::size_t i : out.split.above) {
        indicator[i] = cap;
        tail_sum += sample[i];
    }
    out.value = tail_sum * cap + out.hull_weight * out.split.quantile;
    out.fixed_part = loss_map.adjoint_apply(w, indicator);

    std::vector<double> unit(n, 0.0);
    for (std::size_t i : out.split.equal) {
        unit[i] = 1.0;
        out.extreme_gradients.push_back(loss_map.adjoint_apply(w, unit));
        unit[i] = 0.0;
    }

    const std::vector<double> uniform(out.extreme_gradients.size(),
                                      1.0 / static_cast<double>(out.extreme_gradients.size()));
    out.selected = out.element(uniform);
    return out;
}

ValueGrad superquantile_value_subgrad(const LossMap& loss_map, std::span<const double> w,
                                      const TailSpec& tail) {
    const EmpiricalSample sample(loss_map.eval(w));
    const TailSplit split = tail_split(sample, tail);
    const std::size_t n = sample.size();
    const double cap = tail.cap(n);
    const double hull_weight = split.delta / (1.0 - tail.p());

    // Canonical element as a single weighted adjoint: cap on I_>, an even
    // share of the hull weight on I_=.
    std::vector<double> q(n, 0.0);
    double tail_sum = 0.0;
    for (std::size_t i : split.above) {
        q[i] = cap;
        tail_sum += sample[i];
    }
    const double share = hull_weight / static_cast<double>(split.equal.size());
    for (std::size_t i : split.equal) q[i] = share;

    return ValueGrad{tail_sum * cap + hull_weight * split.quantile, loss_map.adjoint_apply(w, q)};
}

ValueGrad smoothed_value_grad(const LossMap& loss_map, std::span<const double> w,
                              const TailSpec& tail, const SmoothingSpec& spec) {
    const EmpiricalSample sample(loss_map.eval(w));
    const DualScalarState state = solve_dual_1d(sample, spec, tail);
    return ValueGrad{state.theta_value, loss_map.adjoint_apply(w, state.weights.q)};
}

void add_ridge(ValueGrad& out, std::span<const double> w, double strength, std::size_t count) {
    if (strength == 0.0) return;
    const double scale = strength / static_cast<double>(count);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        norm2 += w[j] * w[j];
        out.gradient[j] += scale * w[j];
    }
    out.value += 0.5 * scale * norm2;
}

ValueGrad erm_value_grad(const LossMap& loss_map, std::span<const double> w, double reg) {
    const std::vector<double> losses = loss_map.eval(w);
    const std::size_t n = losses.size();
    double total = 0.0;
    for (double v : losses) total += v;
    const std::vector<double> q(n, 1.0 / static_cast<double>(n));
    ValueGrad out{total / static_cast<double>(n), loss_map.adjoint_apply(w, q)};
    add_ridge(out, w, reg, n);
    return out;
}

} // namespace squant
