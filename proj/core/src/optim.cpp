#include "squant/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace squant {

void OptimConfig::validate() const {
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw InvalidArgument("need 0 < c1 < c2 < 1");
    if (memory < 1) throw InvalidArgument("L-BFGS memory must be at least 1");
    if (!(grad_tol >= 0.0)) throw InvalidArgument("gradient tolerance must be non-negative");
    if (!(initial_step > 0.0)) throw InvalidArgument("initial step must be positive");
}

std::string_view to_string(OptimStatus status) noexcept {
    switch (status) {
    case OptimStatus::converged: return "converged";
    case OptimStatus::max_iter: return "max_iter";
    case OptimStatus::line_search_failure: return "line_search_failure";
    }
    return "unknown";
}

namespace {

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(const ValueGrad& vg) {
    if (!std::isfinite(vg.value)) return false;
    return std::all_of(vg.gradient.begin(), vg.gradient.end(),
                       [](double x) { return std::isfinite(x); });
}

// Oracles may reject non-finite losses by throwing; the optimizer reports
// that as a failed evaluation instead.
ValueGrad guarded_call(const Oracle& oracle, std::span<const double> w) {
    try {
        return oracle(w);
    } catch (const InvalidArgument&) {
        return ValueGrad{std::numeric_limits<double>::quiet_NaN(), {}};
    }
}

struct Trial {
    double step = 0.0;
    double value = 0.0;
    double slope = 0.0; // directional derivative along the search direction
    std::vector<double> w;
    ValueGrad vg;
    bool finite = true;
};

class LineSearch {
public:
    LineSearch(const Oracle& oracle, const OptimConfig& cfg, std::span<const double> w,
               std::span<const double> direction, double f0, double slope0, std::size_t& evals)
        : oracle_(oracle), cfg_(cfg), w_(w), d_(direction), f0_(f0), slope0_(slope0),
          evals_(evals) {}

    // Strong-Wolfe bracketing then zoom (Nocedal & Wright, Alg. 3.5/3.6).
    std::optional<Trial> run(double step) {
        Trial prev{0.0, f0_, slope0_, {}, {}, true};
        for (int k = 0; evals_used_ < cfg_.max_line_search_evals; ++k) {
            Trial cur = evaluate(step);
            if (!cur.finite || cur.value > f0_ + cfg_.c1 * step * slope0_ ||
                (k > 0 && cur.value >= prev.value)) {
                return zoom(prev, cur);
            }
            if (std::abs(cur.slope) <= -cfg_.c2 * slope0_) return cur;
            if (cur.slope >= 0.0) return zoom(cur, prev);
            prev = std::move(cur);
            step *= 2.0;
        }
        return std::nullopt;
    }

private:
    Trial evaluate(double step) {
        Trial t;
        t.step = step;
        t.w.assign(w_.begin(), w_.end());
        for (std::size_t j = 0; j < t.w.size(); ++j) t.w[j] += step * d_[j];
        t.vg = guarded_call(oracle_, t.w);
        ++evals_;
        ++evals_used_;
        t.finite = all_finite(t.vg) && t.vg.gradient.size() == t.w.size();
        if (t.finite) {
            t.value = t.vg.value;
            t.slope = dot(t.vg.gradient, d_);
        } else {
            t.value = std::numeric_limits<double>::infinity();
        }
        return t;
    }

    // `lo` satisfies sufficient decrease and has the lowest value so far.
    std::optional<Trial> zoom(Trial lo, Trial hi) {
        while (evals_used_ < cfg_.max_line_search_evals) {
            const double a = std::min(lo.step, hi.step);
            const double b = std::max(lo.step, hi.step);
            if (b - a <= 1e-14 * std::max(1.0, b)) break;

            double step = 0.5 * (a + b);
            if (lo.finite && hi.finite) {
                // cubic interpolation, kept away from the endpoints
                const double d1 = lo.slope + hi.slope -
                                  3.0 * (lo.value - hi.value) / (lo.step - hi.step);
                const double disc = d1 * d1 - lo.slope * hi.slope;
                if (disc >= 0.0) {
                    const double d2 = std::copysign(std::sqrt(disc), hi.step - lo.step);
                    const double cubic =
                        hi.step - (hi.step - lo.step) * (hi.slope + d2 - d1) /
                                      (hi.slope - lo.slope + 2.0 * d2);
                    const double margin = 0.1 * (b - a);
                    if (std::isfinite(cubic) && cubic > a + margin && cubic < b - margin) {
                        step = cubic;
                    }
                }
            }

            Trial cur = evaluate(step);
            if (!cur.finite || cur.value > f0_ + cfg_.c1 * step * slope0_ ||
                cur.value >= lo.value) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -cfg_.c2 * slope0_) return cur;
            if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
            lo = std::move(cur);
        }
        // Accept the best sufficient-decrease point found, if any progress was made.
        if (lo.step > 0.0 && lo.value < f0_) return lo;
        return std::nullopt;
    }

    const Oracle& oracle_;
    const OptimConfig& cfg_;
    std::span<const double> w_;
    std::span<const double> d_;
    double f0_;
    double slope0_;
    std::size_t& evals_;
    std::size_t evals_used_ = 0;
};

struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

std::vector<double> two_loop(std::span<const double> grad, const std::deque<CurvaturePair>& pairs) {
    std::vector<double> q(grad.begin(), grad.end());
    std::vector<double> alpha(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
        const auto& pr = pairs[k];
        alpha[k] = pr.rho * dot(pr.s, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[k] * pr.y[j];
    }
    if (!pairs.empty()) {
        const auto& last = pairs.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& x : q) x *= gamma;
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& pr = pairs[k];
        const double beta = pr.rho * dot(pr.y, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[k] - beta) * pr.s[j];
    }
    for (double& x : q) x = -x;
    return q;
}

} // namespace

OptimResult minimize(const Oracle& oracle, std::vector<double> w0, const OptimConfig& cfg) {
    cfg.validate();
    OptimResult result;
    result.w_star = std::move(w0);

    ValueGrad current = guarded_call(oracle, result.w_star);
    result.evaluations = 1;
    if (!all_finite(current) || current.gradient.size() != result.w_star.size()) {
        result.status = OptimStatus::line_search_failure;
        result.message = "oracle returned a non-finite value or gradient at the starting point";
        result.value = current.value;
        result.grad_norm = std::numeric_limits<double>::infinity();
        return result;
    }

    std::deque<CurvaturePair> pairs;
    result.status = OptimStatus::max_iter;
    for (;;) {
        result.value = current.value;
        result.grad_norm = sup_norm(current.gradient);
        if (result.grad_norm <= cfg.grad_tol) {
            result.status = OptimStatus::converged;
            break;
        }
        if (result.iterations >= cfg.max_iter) break;

        std::vector<double> direction = two_loop(current.gradient, pairs);
        double slope0 = dot(current.gradient, direction);
        if (!(slope0 < 0.0)) {
            pairs.clear();
            direction = two_loop(current.gradient, pairs);
            slope0 = dot(current.gradient, direction);
        }

        LineSearch search(oracle, cfg, result.w_star, direction, current.value, slope0,
                          result.evaluations);
        std::optional<Trial> accepted = search.run(cfg.initial_step);
        if (!accepted && !pairs.empty()) {
            // retry once along steepest descent with a fresh memory
            pairs.clear();
            direction = two_loop(current.gradient, pairs);
            slope0 = dot(current.gradient, direction);
            LineSearch retry(oracle, cfg, result.w_star, direction, current.value, slope0,
                             result.evaluations);
            accepted = retry.run(cfg.initial_step / std::max(1.0, sup_norm(current.gradient)));
        }
        if (!accepted) {
            result.status = OptimStatus::line_search_failure;
            result.message = "line search could not satisfy the Wolfe conditions";
            break;
        }

        CurvaturePair pair;
        pair.s.resize(direction.size());
        pair.y.resize(direction.size());
        for (std::size_t j = 0; j < direction.size(); ++j) {
            pair.s[j] = accepted->w[j] - result.w_star[j];
            pair.y[j] = accepted->vg.gradient[j] - current.gradient[j];
        }
        const double sy = dot(pair.s, pair.y);
        const double scale = std::sqrt(dot(pair.s, pair.s) * dot(pair.y, pair.y));
        if (sy > 1e-12 * scale && sy > 0.0) {
            pair.rho = 1.0 / sy;
            pairs.push_back(std::move(pair));
            if (pairs.size() > cfg.memory) pairs.pop_front();
        }

        result.w_star = std::move(accepted->w);
        current = std::move(accepted->vg);
        ++result.iterations;
        result.history.push_back(current.value);
    }
    return result;
}

double check_oracle(const Oracle& oracle, std::span<const double> w, double h) {
    if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
    const ValueGrad base = oracle(w);
    std::vector<double> probe(w.begin(), w.end());
    std::vector<double> fd(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double step = h * (1.0 + std::abs(w[j]));
        probe[j] = w[j] + step;
        const double plus = oracle(probe).value;
        probe[j] = w[j] - step;
        const double minus = oracle(probe).value;
        probe[j] = w[j];
        fd[j] = (plus - minus) / (2.0 * step);
    }
    const double scale = std::max({sup_norm(base.gradient), sup_norm(fd), 1e-8});
    double worst = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        worst = std::max(worst, std::abs(base.gradient[j] - fd[j]) / scale);
    }
    return worst;
}

namespace {

std::size_t ridge_count(const LossMap& loss_map, std::size_t count) {
    return count == 0 ? loss_map.size() : count;
}

} // namespace

Oracle make_erm_objective(const LossMap& loss_map, double reg, std::size_t count) {
    const std::size_t n = ridge_count(loss_map, count);
    return [&loss_map, reg, n](std::span<const double> w) {
        ValueGrad out = erm_value_grad(loss_map, w, 0.0);
        add_ridge(out, w, reg, n);
        return out;
    };
}

Oracle make_smoothed_objective(const LossMap& loss_map, const TailSpec& tail,
                               const SmoothingSpec& spec, double reg, std::size_t count) {
    const std::size_t n = ridge_count(loss_map, count);
    return [&loss_map, tail, spec, reg, n](std::span<const double> w) {
        ValueGrad out = smoothed_value_grad(loss_map, w, tail, spec);
        add_ridge(out, w, reg, n);
        return out;
    };
}

Oracle make_superquantile_objective(const LossMap& loss_map, const TailSpec& tail, double reg,
                                    std::size_t count) {
    const std::size_t n = ridge_count(loss_map, count);
    return [&loss_map, tail, reg, n](std::span<const double> w) {
        ValueGrad out = superquantile_value_subgrad(loss_map, w, tail);
        add_ridge(out, w, reg, n);
        return out;
    };
}

} // namespace squant
