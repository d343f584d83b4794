#pragma once

// Infimal-convolution smoothing of the superquantile:
//
//   S_p^nu(u) = max_{q in capped simplex} q^T u - nu D(q),  D(q) = sum_i d(q_i),
//
// solved through the one-dimensional dual
//
//   theta(eta) = eta + sum_i g_nu(u_i - eta),
//   g_nu(s)    = max_{0 <= t <= cap} s t - nu d(t).
//
// Two separable divergences to the uniform distribution are provided:
//   Euclidean: d(t) = (t - 1/n)^2 / 2
//   KL:        d(t) = t log(n t)       (so that D(q) = KL(q || uniform) >= 0)

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "squant/superquantile.hpp"

namespace squant {

enum class SmoothingKind { euclidean, kl };

SmoothingKind parse_smoothing_kind(std::string_view name);
std::string_view to_string(SmoothingKind kind) noexcept;

class SmoothingSpec {
public:
    /// Throws InvalidArgument unless nu > 0 and finite.
    SmoothingSpec(SmoothingKind kind, double nu);

    [[nodiscard]] SmoothingKind kind() const noexcept { return kind_; }
    [[nodiscard]] double nu() const noexcept { return nu_; }

private:
    SmoothingKind kind_;
    double nu_;
};

/// The scalar function g_nu for a fixed (spec, n, p), with its derivative
/// and the two saturation thresholds on s.
class ScalarConjugate {
public:
    ScalarConjugate(const SmoothingSpec& spec, std::size_t n, const TailSpec& tail);

    /// max_{0 <= t <= cap} s t - nu d(t)
    [[nodiscard]] double value(double s) const noexcept;
    /// The maximizing t; non-decreasing in s.
    [[nodiscard]] double derivative(double s) const noexcept;

    /// nu d'_+(0): derivative() is 0 at or below it (-inf for KL).
    [[nodiscard]] double lower_threshold() const noexcept { return lower_; }
    /// nu d'_-(cap): derivative() equals cap at or above it.
    [[nodiscard]] double upper_threshold() const noexcept { return upper_; }
    [[nodiscard]] double cap() const noexcept { return cap_; }

private:
    SmoothingKind kind_;
    double nu_;
    double inv_n_;
    double cap_;
    double lower_ = 0.0;
    double upper_ = 0.0;
};

/// d(t) for one coordinate (0 log 0 := 0 for KL).
double divergence_term(SmoothingKind kind, double t, std::size_t n);
/// D(q) = sum_i d(q_i).
double divergence(SmoothingKind kind, std::span<const double> q);
/// max of D over the capped simplex, attained at the greedy vertex.
double max_divergence(SmoothingKind kind, std::size_t n, const TailSpec& tail);

double g_nu(double s, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail);
double g_nu_prime(double s, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail);

/// Sorted set { u_i - nu d'_+(0), u_i - nu d'_-(cap) }, dropping infinite
/// entries (the KL left points).
std::vector<double> breakpoints(const EmpiricalSample& sample, const SmoothingSpec& spec,
                                const TailSpec& tail);

double dual_objective(double eta, const EmpiricalSample& sample, const ScalarConjugate& g);
/// theta'(eta) = 1 - sum_i g_nu'(u_i - eta), non-decreasing in eta.
double dual_slope(double eta, const EmpiricalSample& sample, const ScalarConjugate& g);

enum class DualMethod {
    closed_form, ///< breakpoint bracketing then interpolation / log-sum-exp
    bisection    ///< plain bisection on theta'
};

struct DualScalarState {
    double eta_star = 0.0;
    DualWeights weights;      ///< g_nu'(u_i - eta_star)
    double theta_value = 0.0; ///< theta(eta_star) = S_p^nu(u)
};

DualScalarState solve_dual_1d(const EmpiricalSample& sample, const SmoothingSpec& spec,
                              const TailSpec& tail, DualMethod method = DualMethod::closed_form);

/// Value and gradient (the unique maximizing q) of S_p^nu at u.
DualResult smoothed_superquantile(const EmpiricalSample& sample, const SmoothingSpec& spec,
                                  const TailSpec& tail);

/// Smoothed positive part max_{0<=t<=1} eta t - nu dt(t) with
/// dt(t) = n(1-p) d(t / (n(1-p))). Equals n(1-p) g_nu(eta).
double m_nu(double eta, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail);
/// Its derivative, the maximizing t in [0, 1].
double m_nu_prime(double eta, const SmoothingSpec& spec, std::size_t n, const TailSpec& tail);

struct MinFormResult {
    double value = 0.0;
    double eta = 0.0;
};

/// min_eta eta + sum_i m_nu(u_i - eta) / (n(1-p)), minimized by bisection on
/// the derivative. Same optimum as smoothed_superquantile through a
/// different route (smoothed positive part in the variational form).
MinFormResult smoothed_min_form(const EmpiricalSample& sample, const SmoothingSpec& spec,
                                const TailSpec& tail);

} // namespace squant
