#include "squant/conv_smoothing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "squant/quadrature.hpp"

namespace squant {

namespace {

constexpr double tail_widths = 40.0;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Acklam's rational approximation followed by Halley steps on erfc.
double normal_quantile(double t) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x = 0.0;
    if (t < p_low) {
        const double q = std::sqrt(-2.0 * std::log(t));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (t <= 1.0 - p_low) {
        const double q = t - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-t));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int k = 0; k < 2; ++k) {
        const double e = normal_cdf(x) - t;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

// mbar_1, the nu = 1 convolution smoothing.
double mbar_unit(const DensitySpec& density, double x) {
    switch (density.kind) {
    case DensityKind::logistic: return softplus(x);
    case DensityKind::gaussian: return x * normal_cdf(x) + normal_pdf(x);
    case DensityKind::uniform: {
        if (x <= density.lo) return 0.0;
        if (x >= density.hi) return x - 0.5 * (density.lo + density.hi);
        const double r = x - density.lo;
        return r * r / (2.0 * (density.hi - density.lo));
    }
    }
    return 0.0;
}

double parse_number(std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InvalidArgument("invalid number in density spec: " + std::string(text));
    }
    return value;
}

} // namespace

DensitySpec DensitySpec::uniform(double lo, double hi) {
    if (!(lo < hi)) throw InvalidArgument("uniform density requires lo < hi");
    return {DensityKind::uniform, lo, hi};
}

DensitySpec parse_density(std::string_view text) {
    if (text == "logistic") return DensitySpec::logistic();
    if (text == "gaussian") return DensitySpec::gaussian();
    if (text == "uniform") return DensitySpec::uniform(-1.0, 1.0);
    if (text.starts_with("uniform:")) {
        const auto rest = text.substr(8);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) {
            throw InvalidArgument("uniform density expects uniform:LO:HI");
        }
        return DensitySpec::uniform(parse_number(rest.substr(0, colon)),
                                    parse_number(rest.substr(colon + 1)));
    }
    throw InvalidArgument("unknown density kind: " + std::string(text));
}

double density_pdf(const DensitySpec& density, double x) {
    switch (density.kind) {
    case DensityKind::logistic: {
        const double e = std::exp(-std::abs(x));
        return e / ((1.0 + e) * (1.0 + e));
    }
    case DensityKind::gaussian: return normal_pdf(x);
    case DensityKind::uniform:
        return (x >= density.lo && x <= density.hi) ? 1.0 / (density.hi - density.lo) : 0.0;
    }
    return 0.0;
}

double density_cdf(const DensitySpec& density, double x) {
    switch (density.kind) {
    case DensityKind::logistic: return 1.0 / (1.0 + std::exp(-x));
    case DensityKind::gaussian: return normal_cdf(x);
    case DensityKind::uniform:
        return std::clamp((x - density.lo) / (density.hi - density.lo), 0.0, 1.0);
    }
    return 0.0;
}

double density_quantile(const DensitySpec& density, double t) {
    switch (density.kind) {
    case DensityKind::logistic: return std::log(t) - std::log1p(-t);
    case DensityKind::gaussian: return normal_quantile(t);
    case DensityKind::uniform: return density.lo + t * (density.hi - density.lo);
    }
    return 0.0;
}

double density_mean(const DensitySpec& density) {
    return density.kind == DensityKind::uniform ? 0.5 * (density.lo + density.hi) : 0.0;
}

double conv_smooth_positive_part(double eta, const DensitySpec& density, double nu) {
    if (!(nu > 0.0)) throw InvalidArgument("smoothing parameter nu must be positive");
    return nu * mbar_unit(density, eta / nu);
}

double conv_smooth_positive_part_quadrature(double eta, const DensitySpec& density, double nu) {
    if (!(nu > 0.0)) throw InvalidArgument("smoothing parameter nu must be positive");
    double lo = -tail_widths * nu;
    double hi = eta;
    if (density.kind == DensityKind::uniform) {
        lo = nu * density.lo;
        hi = std::min(eta, nu * density.hi);
    }
    if (hi <= lo) return 0.0;
    auto integrand = [&](double s) { return (eta - s) * density_pdf(density, s / nu) / nu; };
    return adaptive_simpson(integrand, lo, hi, 1e-10);
}

double InfConvKernel::operator()(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return density_mean(density_);
    const double q = density_quantile(density_, t);
    return t * q - mbar_unit(density_, q);
}

InfConvKernel infconv_from_conv(const DensitySpec& density) { return InfConvKernel(density); }

InfConvDensity::InfConvDensity(const SmoothingSpec& spec, std::size_t n, const TailSpec& tail) {
    if (spec.kind() != SmoothingKind::euclidean) {
        throw InvalidArgument("density reconstruction is only available for the Euclidean kernel");
    }
    const double keep = 1.0 - tail.p();
    const double scale = static_cast<double>(n) * keep;
    const double nu = spec.nu();
    lo_ = -keep * nu / scale;
    hi_ = tail.p() * nu / scale;
    height_ = scale / nu;
    // m_nu(s) for s <= lo_: t* = 0, value -nu dt(0) = -nu (1-p)^2 / (2 n (1-p))
    limit_ = -nu * keep * keep / (2.0 * scale);
}

double InfConvDensity::operator()(double s) const noexcept {
    return (s >= lo_ && s <= hi_) ? height_ : 0.0;
}

double InfConvDensity::mass() const {
    const double pad = hi_ - lo_;
    return adaptive_simpson([this](double s) { return (*this)(s); }, lo_ - pad, hi_ + pad, 1e-12);
}

double InfConvDensity::reconstruct(double eta) const {
    const double pad = hi_ - lo_;
    const double start = lo_ - pad;
    if (eta <= start) return limit_;
    auto integrand = [&](double s) { return (eta - s) * (*this)(s); };
    return limit_ + adaptive_simpson(integrand, start, eta, 1e-10);
}

InfConvDensity density_from_infconv(const SmoothingSpec& spec, std::size_t n,
                                    const TailSpec& tail) {
    return InfConvDensity(spec, n, tail);
}

} // namespace squant
