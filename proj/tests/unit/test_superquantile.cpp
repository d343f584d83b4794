#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "squant/superquantile.hpp"
#include "support/oracles.hpp"

using namespace squant;
using squant::testing::rel_err;

namespace {

double sq(std::vector<double> u, double p) {
    return superquantile_integral(EmpiricalSample(std::move(u)), TailSpec(p));
}

} // namespace

TEST_CASE("sample and tail validation") {
    CHECK_THROWS_WITH_AS(EmpiricalSample({}), "empty sample", InvalidArgument);
    CHECK_THROWS_AS(EmpiricalSample({1.0, std::nan("")}), InvalidArgument);
    CHECK_THROWS_AS(EmpiricalSample({1.0, HUGE_VAL}), InvalidArgument);
    CHECK_THROWS_AS(TailSpec(1.0), InvalidArgument);
    CHECK_THROWS_AS(TailSpec(-0.1), InvalidArgument);
    CHECK_NOTHROW(TailSpec(0.0));
    CHECK(TailSpec(0.5).cap(4) == doctest::Approx(0.5));
}

TEST_CASE("quantile examples") {
    const EmpiricalSample u({4.0, 2.0, 1.0, 3.0});
    CHECK(quantile(u, TailSpec(0.5)) == 2.0);
    CHECK(quantile(u, TailSpec(0.6)) == 3.0);
    CHECK(quantile(u, TailSpec(0.0)) == 1.0);
    CHECK(quantile(EmpiricalSample({7.0, 7.0, 7.0}), TailSpec(0.9)) == 7.0);
}

TEST_CASE("quantile matches CDF inversion over sorted values") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(40);
        auto u = trial % 2 ? squant::testing::random_tied_values(rng, n)
                           : squant::testing::random_values(rng, n);
        const double p = rng.uniform(0.0, 0.999);
        auto sorted = u;
        std::sort(sorted.begin(), sorted.end());
        double expected = sorted.back();
        for (double t : sorted) {
            const auto below = std::count_if(u.begin(), u.end(), [t](double v) { return v <= t; });
            if (static_cast<double>(below) / static_cast<double>(n) >= p) {
                expected = t;
                break;
            }
        }
        CHECK(quantile(EmpiricalSample(u), TailSpec(p)) == expected);
    }
}

TEST_CASE("tail split examples") {
    {
        const auto s = tail_split(EmpiricalSample({1.0, 2.0, 3.0, 4.0}), TailSpec(0.6));
        CHECK(s.quantile == 3.0);
        CHECK(s.above == std::vector<std::size_t>{3});
        CHECK(s.equal == std::vector<std::size_t>{2});
        CHECK(s.delta == doctest::Approx(0.15));
    }
    {
        const auto s = tail_split(EmpiricalSample({1.0, 2.0, 3.0}), TailSpec(1.0 / 3.0));
        CHECK(s.quantile == 1.0);
        CHECK(s.above == std::vector<std::size_t>{1, 2});
        CHECK(s.delta == doctest::Approx(0.0).epsilon(1e-15));
    }
    {
        const auto s = tail_split(EmpiricalSample({5.0, 5.0}), TailSpec(0.5));
        CHECK(s.quantile == 5.0);
        CHECK(s.above.empty());
        CHECK(s.equal == std::vector<std::size_t>{0, 1});
        CHECK(s.delta == doctest::Approx(0.5));
    }
}

TEST_CASE("tail split invariants on tied data") {
    Rng rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.index(30);
        const auto u = squant::testing::random_tied_values(rng, n, 5);
        const double p = rng.uniform(0.0, 0.999);
        const auto s = tail_split(EmpiricalSample(u), TailSpec(p));
        const double nn = static_cast<double>(n);
        CHECK(s.delta >= -1e-15);
        CHECK((nn - s.above.size() - s.equal.size()) / nn - p < 1e-15);
        for (std::size_t i : s.above) CHECK(u[i] > s.quantile);
        for (std::size_t i : s.equal) CHECK(u[i] == s.quantile);
        CHECK(s.above.size() + s.equal.size() ==
              static_cast<std::size_t>(std::count_if(u.begin(), u.end(),
                                                     [&](double v) { return v >= s.quantile; })));
    }
}

TEST_CASE("superquantile examples") {
    CHECK(sq({1, 2, 3, 4}, 0.5) == doctest::Approx(3.5));
    CHECK(sq({1, 2, 3, 4}, 0.6) == doctest::Approx(3.625));
    CHECK(sq({1, 2, 3, 4}, 0.0) == doctest::Approx(2.5));

    const auto d = superquantile_dual(EmpiricalSample({1, 2, 3, 4}), TailSpec(0.5));
    CHECK(d.value == doctest::Approx(3.5));
    CHECK(d.weights.q == std::vector<double>{0.0, 0.0, 0.5, 0.5});

    const auto d75 = superquantile_dual(EmpiricalSample({1, 2, 3, 4}), TailSpec(0.75));
    CHECK(d75.value == doctest::Approx(4.0));
    CHECK(d75.weights.q[3] == doctest::Approx(1.0));

    const auto v = superquantile_variational(EmpiricalSample({1, 2, 3, 4}), TailSpec(0.5));
    CHECK(v.value == doctest::Approx(3.5));
    CHECK(v.eta == 2.0);
    const auto v0 = superquantile_variational(EmpiricalSample({0.0}), TailSpec(0.9));
    CHECK(v0.value == 0.0);
    CHECK(v0.eta == 0.0);
    const auto v6 = superquantile_variational(EmpiricalSample({1, 2, 3, 4}), TailSpec(0.6));
    CHECK(v6.value == doctest::Approx(3.625));
    CHECK(v6.eta == 3.0);
}

TEST_CASE("constant sample: value c and canonical greedy weights") {
    const auto d = superquantile_dual(EmpiricalSample({2.5, 2.5, 2.5, 2.5}), TailSpec(0.6));
    CHECK(d.value == doctest::Approx(2.5));
    // ties broken by ascending index: cap 0.625 to index 0, the rest to index 1
    CHECK(d.weights.q[0] == doctest::Approx(0.625));
    CHECK(d.weights.q[1] == doctest::Approx(0.375));
    CHECK(d.weights.q[2] == 0.0);
    CHECK(d.weights.q[3] == 0.0);
}

TEST_CASE("dual weights are feasible and reproduce the value exactly") {
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.index(60);
        const auto u = trial % 3 == 0 ? squant::testing::random_tied_values(rng, n)
                                      : squant::testing::random_values(rng, n);
        const TailSpec tail(rng.uniform(0.0, 0.99));
        const auto d = superquantile_dual(EmpiricalSample(u), tail);
        double total = 0.0;
        for (double q : d.weights.q) {
            CHECK(q >= 0.0);
            CHECK(q <= tail.cap(n) * (1.0 + 1e-15));
            total += q;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        CHECK(d.value == dot(d.weights.q, u));
    }
}

TEST_CASE("three representations agree") {
    Rng rng(14);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.index(200);
        const auto u = trial % 4 == 0 ? squant::testing::random_tied_values(rng, n)
                                      : squant::testing::random_values(rng, n);
        const double p = 0.1 * static_cast<double>(rng.index(10)) + (trial % 7 == 0 ? 0.09 : 0.0);
        const EmpiricalSample s(u);
        const TailSpec tail(p);
        const double a = superquantile_integral(s, tail);
        CHECK(rel_err(a, superquantile_dual(s, tail).value) <= 1e-9);
        CHECK(rel_err(a, superquantile_variational(s, tail).value) <= 1e-9);
    }
}

TEST_CASE("knapsack brute force for n <= 6") {
    Rng rng(15);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.index(6);
        const auto u = trial % 2 ? squant::testing::random_tied_values(rng, n)
                                 : squant::testing::random_values(rng, n);
        const TailSpec tail(rng.uniform(0.0, 0.95));
        const double brute = squant::testing::knapsack_brute_force(u, tail.cap(n));
        CHECK(std::abs(superquantile_dual(EmpiricalSample(u), tail).value - brute) <= 1e-10);
    }
}

TEST_CASE("monotone in p with mean and max endpoints") {
    Rng rng(16);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.index(50);
        const auto u = squant::testing::random_values(rng, n);
        const EmpiricalSample s(u);
        double prev = -HUGE_VAL;
        for (int k = 0; k <= 99; ++k) {
            const double v = superquantile_integral(s, TailSpec(0.01 * k));
            CHECK(v >= prev - 1e-12 * std::max(1.0, std::abs(v)));
            prev = v;
        }
        const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
        CHECK(rel_err(superquantile_integral(s, TailSpec(0.0)), mean) <= 1e-12);
        const double near_one = 1.0 - 1.0 / (2.0 * static_cast<double>(n));
        CHECK(rel_err(superquantile_integral(s, TailSpec(near_one)),
                      *std::max_element(u.begin(), u.end())) <= 1e-12);
    }
}

TEST_CASE("coherence axioms") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(40);
        const auto u = squant::testing::random_values(rng, n);
        auto v = squant::testing::random_values(rng, n);
        const double p = rng.uniform(0.0, 0.99);
        const double c = 5.0 * rng.normal();
        const double lambda = rng.uniform(0.0, 4.0);
        const double su = sq(u, p);

        auto shifted = u;
        for (double& x : shifted) x += c;
        CHECK(rel_err(sq(shifted, p), su + c) <= 1e-10);

        auto scaled = u;
        for (double& x : scaled) x *= lambda;
        CHECK(rel_err(sq(scaled, p), lambda * su) <= 1e-10);

        auto dominating = u;
        for (double& x : dominating) x += std::abs(rng.normal());
        CHECK(sq(dominating, p) >= su - 1e-12);

        std::vector<double> mid(n);
        for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * u[i] + 0.5 * v[i];
        CHECK(sq(mid, p) <= 0.5 * su + 0.5 * sq(v, p) + 1e-10);
    }
}
