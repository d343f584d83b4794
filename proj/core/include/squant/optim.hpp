#pragma once

// Limited-memory BFGS with a strong-Wolfe line search, for the smooth
// (smoothed superquantile or ERM) training objectives.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squant/oracles.hpp"

namespace squant {

using Oracle = std::function<ValueGrad(std::span<const double>)>;

struct OptimConfig {
    std::size_t memory = 10;
    std::size_t max_iter = 500;
    double grad_tol = 1e-6; ///< on the sup-norm of the gradient
    double c1 = 1e-4;
    double c2 = 0.9;
    double initial_step = 1.0;
    std::size_t max_line_search_evals = 60;

    /// Throws InvalidArgument unless 0 < c1 < c2 < 1 and memory >= 1.
    void validate() const;
};

enum class OptimStatus { converged, max_iter, line_search_failure };

std::string_view to_string(OptimStatus status) noexcept;

struct OptimResult {
    std::vector<double> w_star;
    double value = 0.0;
    double grad_norm = 0.0; ///< sup-norm at w_star
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    OptimStatus status = OptimStatus::max_iter;
    std::string message;
    std::vector<double> history; ///< objective value after each accepted iteration
};

/// Never throws on numerical trouble: non-finite oracle output and failed
/// line searches are reported through `status`.
OptimResult minimize(const Oracle& oracle, std::vector<double> w0, const OptimConfig& cfg = {});

/// Largest relative error between the oracle gradient and central finite
/// differences with per-coordinate steps h (1 + |w_j|). Each coordinate's
/// error is measured against max(|g_j|, |fd_j|, 1).
double check_oracle(const Oracle& oracle, std::span<const double> w, double h = 1e-6);

// Objective builders. The ridge term is reg / (2 count) |w|^2; count
// defaults to the number of loss components.

Oracle make_erm_objective(const LossMap& loss_map, double reg, std::size_t count = 0);
Oracle make_smoothed_objective(const LossMap& loss_map, const TailSpec& tail,
                               const SmoothingSpec& spec, double reg, std::size_t count = 0);
Oracle make_superquantile_objective(const LossMap& loss_map, const TailSpec& tail, double reg,
                                    std::size_t count = 0);

} // namespace squant
