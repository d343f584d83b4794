#include "squant/quadrature.hpp"

#include <cmath>

namespace squant {

namespace {

struct Panel {
    double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double refine(const std::function<double(double)>& f, const Panel& panel, double tol, int depth) {
    const double m = 0.5 * (panel.a + panel.b);
    const double lm = 0.5 * (panel.a + m);
    const double rm = 0.5 * (m + panel.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(panel.a, m, panel.fa, flm, panel.fm);
    const double right = simpson(m, panel.b, panel.fm, frm, panel.fb);
    const double diff = left + right - panel.whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return refine(f, Panel{panel.a, m, panel.fa, flm, panel.fm, left}, 0.5 * tol, depth - 1) +
           refine(f, Panel{m, panel.b, panel.fm, frm, panel.fb, right}, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int initial_panels, int max_depth) {
    if (a == b) return 0.0;
    const int panels = initial_panels < 1 ? 1 : initial_panels;
    const double h = (b - a) / panels;
    const double panel_tol = abs_tol / panels;
    double total = 0.0;
    double left = a;
    double f_left = f(a);
    for (int k = 1; k <= panels; ++k) {
        const double right = k == panels ? b : a + k * h;
        const double f_right = f(right);
        const double f_mid = f(0.5 * (left + right));
        total += refine(f, Panel{left, right, f_left, f_mid, f_right,
                                 simpson(left, right, f_left, f_mid, f_right)},
                        panel_tol, max_depth);
        left = right;
        f_left = f_right;
    }
    return total;
}

} // namespace squant
