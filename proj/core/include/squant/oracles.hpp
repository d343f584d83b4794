#pragma once

// First-order oracles for f(w) = S_p(L(w)) and its smoothed counterpart
// f_nu(w) = S_p^nu(L(w)), where L: R^d -> R^n is accessed only through its
// values and the adjoint-Jacobian action q -> sum_i q_i grad L_i(w).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "squant/smoothing.hpp"
#include "squant/superquantile.hpp"

namespace squant {

/// Differentiable map w -> (L_1(w), ..., L_n(w)). Implementations must be
/// safe for concurrent const calls.
class LossMap {
public:
    virtual ~LossMap() = default;

    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual std::size_t size() const = 0;
    [[nodiscard]] virtual std::vector<double> eval(std::span<const double> w) const = 0;
    /// sum_i q_i grad L_i(w); linear in q.
    [[nodiscard]] virtual std::vector<double> adjoint_apply(std::span<const double> w,
                                                            std::span<const double> q) const = 0;
};

/// LossMap backed by two callables; handy for small analytic maps.
class FunctionLossMap final : public LossMap {
public:
    using EvalFn = std::function<std::vector<double>(std::span<const double>)>;
    using AdjointFn =
        std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;

    FunctionLossMap(std::size_t dim, std::size_t size, EvalFn eval, AdjointFn adjoint)
        : dim_(dim), size_(size), eval_(std::move(eval)), adjoint_(std::move(adjoint)) {}

    std::size_t dim() const override { return dim_; }
    std::size_t size() const override { return size_; }
    std::vector<double> eval(std::span<const double> w) const override { return eval_(w); }
    std::vector<double> adjoint_apply(std::span<const double> w,
                                      std::span<const double> q) const override {
        return adjoint_(w, q);
    }

private:
    std::size_t dim_;
    std::size_t size_;
    EvalFn eval_;
    AdjointFn adjoint_;
};

struct ValueGrad {
    double value = 0.0;
    std::vector<double> gradient;
};

/// The subdifferential of f at w:
///   fixed_part + hull_weight * conv{ extreme_gradients }.
struct SubdifferentialDescription {
    double value = 0.0;                             ///< f(w)
    TailSplit split;                                ///< of L(w)
    std::vector<double> fixed_part;                 ///< sum_{I_>} grad L_i / (n(1-p))
    std::vector<std::vector<double>> extreme_gradients; ///< grad L_i, i in I_=
    double hull_weight = 0.0;                       ///< delta / (1-p)
    std::vector<double> selected;                   ///< fixed_part + hull_weight * mean(extreme)

    /// f is differentiable at w exactly when |I_=| == 1.
    [[nodiscard]] bool is_singleton() const noexcept { return extreme_gradients.size() == 1; }
    /// fixed_part + hull_weight * sum_k lambda_k extreme_gradients[k].
    [[nodiscard]] std::vector<double> element(std::span<const double> lambda) const;
};

SubdifferentialDescription subdifferential(const LossMap& loss_map, std::span<const double> w,
                                           const TailSpec& tail);

/// f(w) with the canonical subgradient.
ValueGrad superquantile_value_subgrad(const LossMap& loss_map, std::span<const double> w,
                                      const TailSpec& tail);

/// f_nu(w) and its gradient: one eval, one 1-D dual solve, one adjoint_apply.
ValueGrad smoothed_value_grad(const LossMap& loss_map, std::span<const double> w,
                              const TailSpec& tail, const SmoothingSpec& spec);

/// mean_i L_i(w) + reg / (2 n) |w|^2, with n = loss_map.size().
ValueGrad erm_value_grad(const LossMap& loss_map, std::span<const double> w, double reg);

/// Adds strength / (2 count) |w|^2 to an oracle result.
void add_ridge(ValueGrad& out, std::span<const double> w, double strength, std::size_t count);

} // namespace squant
