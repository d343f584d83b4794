#pragma once

// Convolution smoothing of the positive part max(eta, 0) and its
// correspondence with infimal-convolution smoothing.
//
//   mbar_nu(eta) = (1/nu) int_{-inf}^{eta} (eta - s) rho(s / nu) ds = nu mbar_1(eta / nu)
//
// A density rho gives an inf-convolution kernel dbar(t) = t Q_t - mbar_1(Q_t)
// on [0, 1]; conversely the Euclidean kernel gives rho = m_1'' (a uniform
// density on the interval where the smoothed positive part is quadratic).

#include <cstddef>
#include <string_view>

#include "squant/smoothing.hpp"

namespace squant {

enum class DensityKind { logistic, uniform, gaussian };

struct DensitySpec {
    DensityKind kind = DensityKind::logistic;
    double lo = -1.0; ///< uniform support, ignored otherwise
    double hi = 1.0;

    static DensitySpec logistic() { return {DensityKind::logistic, 0.0, 0.0}; }
    static DensitySpec gaussian() { return {DensityKind::gaussian, 0.0, 0.0}; }
    static DensitySpec uniform(double lo, double hi);
};

/// "logistic", "gaussian" or "uniform:LO:HI"; throws InvalidArgument otherwise.
DensitySpec parse_density(std::string_view text);

double density_pdf(const DensitySpec& density, double x);
double density_cdf(const DensitySpec& density, double x);
/// Q_t(rho) for t in (0, 1).
double density_quantile(const DensitySpec& density, double t);
double density_mean(const DensitySpec& density);

/// Closed form of mbar_nu(eta).
double conv_smooth_positive_part(double eta, const DensitySpec& density, double nu);
/// Same quantity by adaptive quadrature (absolute tolerance 1e-10, infinite
/// tails cut 40 nu widths out). Test oracle for the closed forms.
double conv_smooth_positive_part_quadrature(double eta, const DensitySpec& density, double nu);

/// dbar(t) = t Q_t(rho) - mbar_1(Q_t(rho)) on [0, 1], endpoint values taken as limits.
class InfConvKernel {
public:
    explicit InfConvKernel(DensitySpec density) : density_(density) {}
    double operator()(double t) const;
    [[nodiscard]] const DensitySpec& density() const noexcept { return density_; }

private:
    DensitySpec density_;
};

InfConvKernel infconv_from_conv(const DensitySpec& density);

/// rho = m_nu'' for the Euclidean kernel: height n(1-p)/nu on
/// [-(1-p) nu / (n(1-p)), p nu / (n(1-p))], zero elsewhere.
class InfConvDensity {
public:
    InfConvDensity(const SmoothingSpec& spec, std::size_t n, const TailSpec& tail);

    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return hi_; }
    [[nodiscard]] double height() const noexcept { return height_; }
    /// lim_{s -> -inf} m_nu(s).
    [[nodiscard]] double limit_at_minus_infinity() const noexcept { return limit_; }

    [[nodiscard]] double operator()(double s) const noexcept;
    /// int rho, by quadrature.
    [[nodiscard]] double mass() const;
    /// m(-inf) + int_{-inf}^{eta} (eta - s) rho(s) ds, by quadrature.
    [[nodiscard]] double reconstruct(double eta) const;

private:
    double lo_;
    double hi_;
    double height_;
    double limit_;
};

/// Throws InvalidArgument for the KL kernel (its m'' has unbounded support).
InfConvDensity density_from_infconv(const SmoothingSpec& spec, std::size_t n,
                                    const TailSpec& tail);

} // namespace squant
