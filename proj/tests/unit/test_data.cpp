#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "squant/data.hpp"
#include "squant/rng.hpp"

using namespace squant;

namespace {

Dataset parse(const std::string& text, Task task = Task::regression,
              std::vector<std::string> categorical = {}) {
    std::istringstream in(text);
    return read_csv(in, CsvSchema{task, std::move(categorical)});
}

Dataset labelled(std::size_t neg, std::size_t pos) {
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < neg + pos; ++i) {
        x.push_back(static_cast<double>(i));
        y.push_back(i < neg ? -1.0 : 1.0);
    }
    return Dataset(neg + pos, 1, std::move(x), std::move(y));
}

} // namespace

TEST_CASE("rng is deterministic and well spread") {
    Rng a(42), b(42), c(43);
    for (int k = 0; k < 100; ++k) CHECK(a.next() == b.next());
    CHECK(Rng(42).next() != c.next());
    Rng r(7);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const double z = r.normal();
        sum += z;
        sum2 += z * z;
    }
    CHECK(std::abs(sum / n) <= 5.0 / std::sqrt(n));
    CHECK(std::abs(sum2 / n - 1.0) <= 0.05);
    for (int k = 0; k < 1000; ++k) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.index(7) < 7);
    }
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 20; ++k) CHECK(sorted[k] == k);
}

TEST_CASE("noiseless quadratic generator") {
    SyntheticSpec spec;
    spec.n = 50;
    spec.w_bar = {1.0, -2.0, 0.5};
    spec.sigma = 0.0;
    spec.seed = 9;
    const auto toy = generate_quadratic(spec);
    CHECK(toy.data.rows == 50);
    CHECK_FALSE(toy.groups.has_value());
    for (std::size_t i = 0; i < 50; ++i) {
        const double x = toy.data.at(i, 0);
        CHECK(x >= kToyXLow);
        CHECK(x < kToyXHigh);
        CHECK(toy.data.targets[i] == 1.0 - 2.0 * x + 0.5 * x * x);
    }
}

TEST_CASE("generator determinism and mixture counts") {
    SyntheticSpec spec;
    spec.n = 101;
    spec.mixture = Mixture{0.2, {3.0, 0.0, 0.0}, 0.1};
    spec.seed = 5;
    const auto a = generate_quadratic(spec);
    const auto b = generate_quadratic(spec);
    CHECK(a.data.features == b.data.features);
    CHECK(a.data.targets == b.data.targets);
    CHECK(std::count(a.alternate.begin(), a.alternate.end(), true) == 20); // round(20.2)
    REQUIRE(a.groups.has_value());
    CHECK(a.groups->groups() == 2);

    spec.conforming_groups = 4;
    spec.n = 500;
    const auto fed = generate_quadratic(spec);
    REQUIRE(fed.groups.has_value());
    CHECK(fed.groups->groups() == 5);
    const auto sizes = fed.groups->group_sizes();
    CHECK(sizes[4] == 100);
    for (std::size_t g = 0; g < 4; ++g) CHECK(sizes[g] == 100);
    for (std::size_t i = 0; i < 500; ++i) CHECK((fed.groups->assignment[i] == 4) == fed.alternate[i]);

    spec.mixture->fraction = 1.0;
    CHECK_THROWS_AS(generate_quadratic(spec), InvalidArgument);
}

TEST_CASE("generator noise moments") {
    SyntheticSpec spec;
    spec.n = 100000;
    spec.sigma = 2.0;
    spec.seed = 1;
    const auto toy = generate_quadratic(spec);
    double sum = 0.0, sum2 = 0.0;
    for (double y : toy.data.targets) {
        sum += y;
        sum2 += y * y;
    }
    const double n = 1e5;
    CHECK(std::abs(sum / n) <= 5 * 2.0 / std::sqrt(n));
    CHECK(std::abs(sum2 / n - 4.0) <= 5 * 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("csv numeric file") {
    const auto d = parse("a,b,y\n1,2,3\n4.5,-6e-1,7\n");
    CHECK(d.rows == 2);
    CHECK(d.cols == 2);
    CHECK(d.at(1, 1) == -0.6);
    CHECK(d.targets == std::vector<double>{3.0, 7.0});
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("csv one-hot encoding in column order") {
    const auto d = parse("size,color,w,y\n1,red,2,0\n2,blue,3,1\n3,green,4,1\n4,red,5,0\n");
    CHECK(d.cols == 5);
    CHECK(d.feature_names ==
          std::vector<std::string>{"size", "color=blue", "color=green", "color=red", "w"});
    CHECK(d.at(0, 3) == 1.0);
    CHECK(d.at(1, 1) == 1.0);
    CHECK(d.at(2, 2) == 1.0);
    CHECK(d.at(2, 4) == 4.0);

    // forced categorical numeric column
    const auto f = parse("k,y\n1,0\n2,1\n1,1\n", Task::regression, {"k"});
    CHECK(f.cols == 2);
    CHECK(f.feature_names == std::vector<std::string>{"k=1", "k=2"});
}

TEST_CASE("abalone-style Sex column") {
    const auto d = parse(
        "Sex,Length,Diameter,Height,Whole,Shucked,Viscera,Shell,Rings\n"
        "M,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,15\n"
        "F,0.53,0.42,0.135,0.677,0.2565,0.1415,0.21,9\n"
        "I,0.33,0.255,0.08,0.205,0.0895,0.0395,0.055,7\n");
    CHECK(d.cols == 10);
    CHECK(d.feature_names[0] == "Sex=F");
    CHECK(d.feature_names[1] == "Sex=I");
    CHECK(d.feature_names[2] == "Sex=M");
    CHECK(d.targets[0] == 15.0);
}

TEST_CASE("csv classification labels") {
    const auto d = parse("x,label\n1,yes\n2,no\n3,yes\n", Task::classification);
    CHECK(d.targets == std::vector<double>{1.0, -1.0, 1.0});
    const auto n = parse("x,label\n1,1\n2,0\n", Task::classification);
    CHECK(n.targets == std::vector<double>{1.0, -1.0});
}

TEST_CASE("csv errors are distinct") {
    CHECK_THROWS_AS(parse("a,y\n1,2\n3\n"), RaggedRowError);
    CHECK_THROWS_AS(parse("a,y\n1,a\n2,b\n3,c\n", Task::classification), TooManyClassesError);
    CHECK_THROWS_AS(parse("a,y\n1,2\nfoo,3\n"), NumericParseError);
    CHECK_THROWS_AS(parse("a,y\n1,zz\n"), NumericParseError);
    CHECK_THROWS_AS(parse(""), CsvError);
    CHECK_THROWS_AS(parse("a,y\n"), CsvError);
    try {
        parse("a,y\n1,2\n\n3,4,5\n");
        FAIL("expected a ragged row error");
    } catch (const RaggedRowError& e) {
        CHECK(e.line() == 4);
    }
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {}), CsvError);
}

TEST_CASE("csv quoting and CRLF") {
    const auto d = parse("\"a\",y\r\n\"1.5\",2\r\n");
    CHECK(d.at(0, 0) == 1.5);
    const auto c = parse("name,y\n\"x, y\",1\n\"z\",2\n");
    CHECK(c.feature_names == std::vector<std::string>{"name=x, y", "name=z"});
}

TEST_CASE("load_csv from disk") {
    const auto path = std::filesystem::temp_directory_path() / "squant_test_load.csv";
    {
        std::ofstream out(path);
        out << "x,y\n1,2\n3,4\n";
    }
    const auto d = load_csv(path, {});
    CHECK(d.rows == 2);
    std::filesystem::remove(path);
}

TEST_CASE("downsample majority") {
    const auto d = downsample_majority(labelled(100, 100), 0.1, 3);
    CHECK(d.rows == 110);
    CHECK(std::count(d.targets.begin(), d.targets.end(), 1.0) == 100);

    const auto skewed = downsample_majority(labelled(383, 307), 0.1, 4);
    CHECK(std::count(skewed.targets.begin(), skewed.targets.end(), -1.0) == 31);
    CHECK(std::count(skewed.targets.begin(), skewed.targets.end(), 1.0) == 307);
    CHECK(std::is_sorted(skewed.features.begin(), skewed.features.end()));

    const auto same = downsample_majority(labelled(30, 30), 1.0, 5);
    CHECK(same.rows == 60);

    const auto a = downsample_majority(labelled(300, 100), 0.1, 6);
    const auto b = downsample_majority(labelled(300, 100), 0.1, 6);
    CHECK(a.features == b.features);

    CHECK_THROWS_AS(downsample_majority(labelled(10, 0), 0.1, 0), InvalidArgument);
    CHECK_THROWS_AS(downsample_majority(Dataset(1, 1, {0.0}, {2.0}), 0.1, 0), InvalidArgument);
}

TEST_CASE("train/test split partitions the rows") {
    for (std::size_t n : {2u, 5u, 10u, 101u}) {
        const auto s = train_test_split(n, SplitSpec{0.8, 17});
        CHECK(s.train.size() == std::clamp<std::size_t>(std::llround(0.8 * n), 1, n - 1));
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.test.begin(), s.test.end());
        CHECK(all.size() == n);
        CHECK(s.train.size() + s.test.size() == n);
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    }
    CHECK(train_test_split(50, SplitSpec{0.8, 1}).train == train_test_split(50, SplitSpec{0.8, 1}).train);
    CHECK_THROWS_AS(train_test_split(10, SplitSpec{1.0, 1}), InvalidArgument);
}

TEST_CASE("k-fold") {
    const auto folds = kfold(23, 5, 2);
    CHECK(folds.size() == 5);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
        CHECK((f.size() == 4 || f.size() == 5));
        all.insert(f.begin(), f.end());
    }
    CHECK(all.size() == 23);
    CHECK_THROWS_AS(kfold(3, 5, 0), InvalidArgument);
}

TEST_CASE("standardizer") {
    const Dataset d(3, 2, {1, 5, 2, 5, 3, 5}, {0, 0, 0});
    const auto s = Standardizer::fit(d);
    const auto z = s.apply(d);
    CHECK(z.at(0, 0) == doctest::Approx(-std::sqrt(1.5)));
    CHECK(z.at(1, 0) == doctest::Approx(0.0));
    CHECK(z.at(2, 1) == 0.0); // constant column keeps unit scale
}

TEST_CASE("credit-like generator") {
    const auto d = generate_credit_like({});
    CHECK(d.rows == 690);
    CHECK(d.cols == 14);
    CHECK(std::count(d.targets.begin(), d.targets.end(), 1.0) == 307);
    const auto again = generate_credit_like({});
    CHECK(d.features == again.features);
}
