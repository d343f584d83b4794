// Acceptance criteria 1-12: one PASS/FAIL line each, exit status 1 on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "experiments.hpp"
#include "squant/conv_smoothing.hpp"
#include "squant/data.hpp"
#include "squant/models.hpp"
#include "squant/optim.hpp"
#include "squant/rng.hpp"
#include "squant/smoothing.hpp"
#include "squant/superquantile.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace squant;
using squant::testing::rel_err;
namespace ex = squant::experiments;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::vector<double> draw(Rng& rng, std::size_t n) {
    return rng.index(5) == 0 ? squant::testing::random_tied_values(rng, n)
                             : squant::testing::random_values(rng, n);
}

Outcome representations() {
    const auto t0 = Clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const EmpiricalSample s(draw(rng, 1 + rng.index(200)));
        const TailSpec tail(rng.uniform(0.0, 0.999));
        const double a = superquantile_integral(s, tail);
        worst = std::max({worst, rel_err(a, superquantile_dual(s, tail).value),
                          rel_err(a, superquantile_variational(s, tail).value)});
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 5.0, fmt("max relative disagreement %.2e, %.3f s", worst, secs)};
}

Outcome knapsack() {
    Rng rng(102);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(6);
        const auto u = draw(rng, n);
        const TailSpec tail(rng.uniform(0.0, 0.99));
        const double brute = squant::testing::knapsack_brute_force(u, tail.cap(n));
        worst = std::max(worst, std::abs(superquantile_dual(EmpiricalSample(u), tail).value - brute));
    }
    return {worst <= 1e-10, fmt("max |dual - vertex enumeration| %.2e", worst)};
}

Outcome coherence() {
    Rng rng(103);
    std::size_t failures = 0;
    auto sq = [](const std::vector<double>& u, const TailSpec& t) {
        return superquantile_integral(EmpiricalSample(u), t);
    };
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.index(100);
        const auto u = draw(rng, n);
        auto v = draw(rng, n);
        const TailSpec tail(rng.uniform(0.0, 0.99));
        const double su = sq(u, tail);
        const double tol = 1e-10 * (1.0 + std::abs(su));

        const double c = rng.uniform(-50.0, 50.0);
        std::vector<double> shifted(u);
        for (double& x : shifted) x += c;
        failures += std::abs(sq(shifted, tail) - (su + c)) > 1e-10 * (1.0 + std::abs(su) + std::abs(c));

        const double lambda = std::exp(rng.uniform(-3.0, 3.0));
        std::vector<double> scaled(u);
        for (double& x : scaled) x *= lambda;
        failures += std::abs(sq(scaled, tail) - lambda * su) > 1e-10 * (1.0 + lambda * std::abs(su));

        std::vector<double> above(u);
        for (double& x : above) x += std::abs(rng.normal());
        failures += sq(above, tail) < su - tol;

        const double theta = rng.uniform();
        std::vector<double> mix(n);
        for (std::size_t i = 0; i < n; ++i) mix[i] = theta * u[i] + (1.0 - theta) * v[i];
        const double rhs = theta * su + (1.0 - theta) * sq(v, tail);
        failures += sq(mix, tail) > rhs + 1e-10 * (1.0 + std::abs(rhs));
    }
    return {failures == 0, fmt("%.0f violations over 4 x 500 checks", static_cast<double>(failures))};
}

struct CompositionInstance {
    Dataset data;
    ModelSpec model;
    TailSpec tail;
    SmoothingSpec spec;
    std::vector<double> w;
};

std::vector<CompositionInstance> composition_instances() {
    Rng rng(104);
    std::vector<CompositionInstance> out;
    const double nus[] = {1e-2, 1e-1, 1.0};
    for (int trial = 0; trial < 200; ++trial) {
        const LossKind loss = trial % 2 ? LossKind::logistic : LossKind::squared;
        const SmoothingKind kind = (trial / 2) % 2 ? SmoothingKind::kl : SmoothingKind::euclidean;
        const int degree = 1 + static_cast<int>(rng.index(3));
        auto data = squant::testing::random_poly_dataset(rng, 10 + rng.index(40), loss);
        const auto model = ModelSpec::parse("poly:" + std::to_string(degree), loss);
        out.push_back({std::move(data), model, TailSpec(rng.uniform(0.0, 0.95)),
                       SmoothingSpec(kind, nus[(trial / 4) % 3]),
                       squant::testing::random_point(rng, model.param_dim(1))});
    }
    return out;
}

Outcome gradients(const std::vector<CompositionInstance>& cases) {
    double worst = 0.0;
    for (const auto& c : cases) {
        const PointwiseLossMap map(c.data, c.model);
        worst = std::max(worst, check_oracle(make_smoothed_objective(map, c.tail, c.spec, 0.0), c.w));
    }
    return {worst <= 1e-5, fmt("max relative gradient error %.2e over %.0f instances", worst,
                               static_cast<double>(cases.size()))};
}

Outcome sandwich(const std::vector<CompositionInstance>& cases) {
    std::size_t failures = 0;
    std::size_t half_checked = 0;
    for (const auto& c : cases) {
        const PointwiseLossMap map(c.data, c.model);
        const double f = superquantile_value_subgrad(map, c.w, c.tail).value;
        const double fnu = smoothed_value_grad(map, c.w, c.tail, c.spec).value;
        const double dmax = max_divergence(c.spec.kind(), map.size(), c.tail);
        const double slack = 1e-10 * std::max(1.0, std::abs(f));
        failures += !(fnu <= f + slack && f <= fnu + c.spec.nu() * dmax + slack);
        if (dmax <= 0.5) {
            ++half_checked;
            failures += f > fnu + 0.5 * c.spec.nu() + slack;
        }
    }
    return {failures == 0, fmt("%.0f violations; nu/2 bound applied on %.0f instances",
                               static_cast<double>(failures), static_cast<double>(half_checked))};
}

Outcome closed_form() {
    Rng rng(106);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const SmoothingKind kind = trial % 2 ? SmoothingKind::kl : SmoothingKind::euclidean;
        const std::size_t n = 1 + rng.index(150);
        const EmpiricalSample s(draw(rng, n));
        const TailSpec tail(rng.uniform(0.0, 0.99));
        const SmoothingSpec spec(kind, std::exp(rng.uniform(-5.0, 3.0)));
        const auto a = solve_dual_1d(s, spec, tail, DualMethod::closed_form);
        const auto b = solve_dual_1d(s, spec, tail, DualMethod::bisection);
        worst = std::max(worst, rel_err(a.theta_value, b.theta_value));
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a.weights.q[i] - b.weights.q[i]));
    }
    return {worst <= 1e-8, fmt("max closed-form vs bisection difference %.2e", worst)};
}

Outcome identities() {
    Rng rng(107);
    double g_vs_m = 0.0;
    double min_form = 0.0;
    double conj = 0.0;
    double recon = 0.0;
    for (auto kind : {SmoothingKind::euclidean, SmoothingKind::kl}) {
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 1 + rng.index(30);
            const TailSpec tail(rng.uniform(0.0, 0.95));
            const SmoothingSpec spec(kind, std::exp(rng.uniform(-2.0, 1.0)));
            const double scale = static_cast<double>(n) * (1.0 - tail.p());
            for (int k = -60; k <= 60; ++k) {
                const double eta = 0.1 * k;
                const double m = m_nu(eta, spec, n, tail);
                g_vs_m = std::max(g_vs_m, std::abs(g_nu(eta, spec, n, tail) * scale - m) /
                                              std::max(1.0, std::abs(m)));
            }
            const EmpiricalSample s(squant::testing::random_values(rng, 1 + rng.index(60)));
            min_form = std::max(min_form, rel_err(smoothed_min_form(s, spec, tail).value,
                                                  smoothed_superquantile(s, spec, tail).value));
        }
    }
    const auto kernel = infconv_from_conv(DensitySpec::logistic());
    for (int k = -300; k <= 300; ++k) {
        const double eta = 0.1 * k;
        const double t = 1.0 / (1.0 + std::exp(-eta));
        conj = std::max(conj, std::abs(eta * t - kernel(t) -
                                       conv_smooth_positive_part(eta, DensitySpec::logistic(), 1.0)));
    }
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.index(30);
        const TailSpec tail(rng.uniform(0.0, 0.95));
        const SmoothingSpec spec(SmoothingKind::euclidean, std::exp(rng.uniform(-2.0, 1.0)));
        // m_1 -> rho = m_1'' -> m_1 by quadrature
        const auto rho = density_from_infconv(spec, n, tail);
        for (int k = -40; k <= 40; ++k) {
            const double eta = 0.05 * k * (1.0 + spec.nu());
            recon = std::max(recon, std::abs(rho.reconstruct(eta) - m_nu(eta, spec, n, tail)));
        }
        // uniform rho -> convolution smoothing -> m_nu up to the constant m_nu(-inf)
        const auto density = DensitySpec::uniform(rho.lo() / spec.nu(), rho.hi() / spec.nu());
        for (int k = -40; k <= 40; ++k) {
            const double eta = 0.05 * k * (1.0 + spec.nu());
            recon = std::max(recon, std::abs(conv_smooth_positive_part(eta, density, spec.nu()) +
                                             rho.limit_at_minus_infinity() - m_nu(eta, spec, n, tail)));
        }
    }
    const bool pass = g_vs_m <= 1e-12 && min_form <= 1e-9 && conj <= 1e-8 && recon <= 1e-4;
    char buf[200];
    std::snprintf(buf, sizeof buf, "g*n(1-p) vs m %.1e, min form %.1e, softplus conjugacy %.1e, reconstruction %.1e",
                  g_vs_m, min_form, conj, recon);
    return {pass, buf};
}

Outcome toy_regression() {
    ex::ToyRegConfig cfg;
    const auto report = ex::run_toyreg(cfg).report;
    const auto& e = report["models"]["erm"]["test"];
    const auto& s = report["models"]["superquantile"]["test"];
    bool pass = true;
    for (const auto& [k, v] : report["pattern"].items()) pass = pass && v.get<bool>();
    char buf[200];
    std::snprintf(buf, sizeof buf, "test residuals ERM mean/p90/p95 %.2f/%.2f/%.2f, superquantile %.2f/%.2f/%.2f",
                  e["mean"].get<double>(), e["p90"].get<double>(), e["p95"].get<double>(),
                  s["mean"].get<double>(), s["p90"].get<double>(), s["p95"].get<double>());
    return {pass, buf};
}

Outcome fairness() {
    const auto report = ex::run_fairness(ex::FederatedConfig{}).report;
    bool pass = true;
    for (const auto& [k, v] : report["pattern"].items()) pass = pass && v.get<bool>();
    std::string detail = "test |L1-L2|:";
    for (const auto& [name, entry] : report["table"].items()) {
        detail += fmt(" %.2f", entry["test"]["gap"].get<double>());
        detail += " (" + name + ")";
    }
    return {pass, detail};
}

Outcome convergence() {
    const auto t0 = Clock::now();
    const auto report = ex::run_convergence(ex::ConvergenceConfig{}).report;
    const double secs = seconds_since(t0);
    std::string detail = "median gaps";
    for (const auto& row : report["table"]) detail += fmt(" %.3g", row["median_gap"].get<double>());
    detail += fmt(", %.2f s", secs);
    return {report["median_gap_strictly_decreasing"].get<bool>() && secs < 60.0, detail};
}

Outcome sweep() {
    SyntheticSpec spec;
    const ex::ToyRegConfig toy;
    spec.n = toy.n;
    spec.w_bar = toy.w_bar;
    spec.sigma = toy.sigma;
    spec.mixture = Mixture{toy.alt_fraction, toy.alt_w_bar, std::nullopt};
    const auto data = generate_quadratic(spec).data;
    const auto model = ModelSpec::parse("poly:2", LossKind::squared);
    const PointwiseLossMap map(data, model);
    const auto w = ex::Trainer::erm(model).fit(map, data.rows, std::vector<double>(3, 0.0)).w_star;

    ex::SweepConfig cfg;
    cfg.p = 0.9;
    const auto report = ex::run_sweep_nu(ex::losses_at(data, model, w), cfg).report;
    const auto& e = report["endpoints"];
    const bool pass = e["smallest_nu_within_2_nu_dmax"].get<bool>() &&
                      e["largest_nu_within_1e-6_of_mean"].get<bool>() &&
                      e["largest_nu_weights_within_1e-6_of_uniform"].get<bool>() &&
                      report["sandwich_holds"].get<bool>();
    char buf[200];
    std::snprintf(buf, sizeof buf, "large nu: rel error to mean %.1e, weight distance %.1e; small nu gap %.1e",
                  e["largest_nu_relative_error_to_mean"].get<double>(),
                  e["largest_nu_weights_uniform_distance"].get<double>(),
                  e["smallest_nu_gap"].get<double>());
    return {pass, buf};
}

Outcome credit() {
    ex::CreditConfig cfg;
    cfg.source = "synthetic";
    const auto report = ex::run_credit(generate_credit_like(CreditSpec{}), cfg).report;
    const auto& s = report["summary"];
    const double erm = s["erm"]["accuracy_mean"].get<double>();
    const double sq = s["superquantile"]["accuracy_mean"].get<double>();
    return {sq >= erm, fmt("mean test accuracy ERM %.3f, superquantile %.3f (synthetic credit-like data)", erm, sq)};
}

} // namespace

int main() {
    const auto cases = composition_instances();
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"representation agreement", representations},
        {"knapsack oracle equivalence", knapsack},
        {"coherence axioms", coherence},
        {"smoothed gradient vs finite differences", [&] { return gradients(cases); }},
        {"sandwich bound", [&] { return sandwich(cases); }},
        {"closed-form eta* vs bisection", closed_form},
        {"smoothing-equivalence identities", identities},
        {"toy regression pattern", toy_regression},
        {"fairness pattern", fairness},
        {"convergence study", convergence},
        {"nu-sweep endpoints", sweep},
        {"credit experiment direction", credit},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
