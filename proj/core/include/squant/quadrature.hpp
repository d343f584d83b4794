#pragma once

#include <functional>

namespace squant {

/// Adaptive Simpson quadrature of f over [a, b] to an absolute tolerance.
/// The interval is first cut into `initial_panels` equal pieces so that
/// narrow features are not skipped by the first coarse estimate.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10, int initial_panels = 64, int max_depth = 40);

} // namespace squant
