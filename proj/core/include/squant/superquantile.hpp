#pragma once

// Quantile and superquantile (CVaR) of a discrete random variable with n
// equiprobable realizations, through the integral, dual (fractional
// knapsack) and variational representations.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "squant/error.hpp"

namespace squant {

/// n >= 1 finite, equiprobable loss values.
class EmpiricalSample {
public:
    /// Throws InvalidArgument("empty sample") or on a non-finite value.
    explicit EmpiricalSample(std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }

private:
    std::vector<double> values_;
};

/// Tail probability p in [0, 1). The per-atom cap of the capped simplex
/// depends on the sample size and is exposed through cap(n).
class TailSpec {
public:
    explicit TailSpec(double p);

    [[nodiscard]] double p() const noexcept { return p_; }
    /// 1 / (n (1 - p)).
    [[nodiscard]] double cap(std::size_t n) const noexcept {
        return 1.0 / (static_cast<double>(n) * (1.0 - p_));
    }

private:
    double p_;
};

struct TailSplit {
    double quantile = 0.0;
    std::vector<std::size_t> above; ///< indices with u_i > quantile, ascending
    std::vector<std::size_t> equal; ///< indices with u_i == quantile, ascending
    double delta = 0.0;             ///< (n - |above|)/n - p
};

/// Probability vector inside the capped simplex.
struct DualWeights {
    std::vector<double> q;
};

struct DualResult {
    double value = 0.0;
    DualWeights weights;
};

struct VariationalResult {
    double value = 0.0;
    double eta = 0.0; ///< minimizer, the left end-point of the solution set
};

/// Smallest sample value t with #{u_i <= t}/n >= p, by selection (no full sort).
double quantile(const EmpiricalSample& sample, const TailSpec& tail);

TailSplit tail_split(const EmpiricalSample& sample, const TailSpec& tail);

/// sum_{above} u_i / (n(1-p)) + delta/(1-p) * Q_p.
double superquantile_integral(const EmpiricalSample& sample, const TailSpec& tail);

/// max q^T u over the capped simplex, solved greedily: values sorted in
/// decreasing order (ties by ascending index), each receives the cap until
/// the remaining budget is smaller, the remainder goes to the next one.
/// The returned value is exactly the dot product q^T u taken in index order.
DualResult superquantile_dual(const EmpiricalSample& sample, const TailSpec& tail);

/// min_eta eta + sum max(u_i - eta, 0) / (n(1-p)), evaluated at eta = Q_p.
VariationalResult superquantile_variational(const EmpiricalSample& sample,
                                            const TailSpec& tail);

/// Canonical greedy vertex of the capped simplex for values sorted by
/// `order` (a permutation of 0..n-1, most important first).
std::vector<double> greedy_capped_weights(std::span<const std::size_t> order, double cap);

/// Index-order dot product, used wherever q^T u must be reproduced exactly.
double dot(std::span<const double> a, std::span<const double> b);

} // namespace squant
