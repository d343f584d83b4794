#include "squant/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string_view>

#include "squant/rng.hpp"

namespace squant {

void SyntheticSpec::validate() const {
    if (n < 1) throw InvalidArgument("synthetic sample size must be at least 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("noise level must be finite and non-negative");
    }
    if (conforming_groups < 1) throw InvalidArgument("need at least one conforming group");
    if (mixture) {
        if (!(mixture->fraction > 0.0 && mixture->fraction < 1.0)) {
            throw InvalidArgument("mixture fraction must lie in (0, 1)");
        }
        if (mixture->sigma && !(*mixture->sigma >= 0.0)) {
            throw InvalidArgument("mixture noise level must be non-negative");
        }
    }
}

namespace {

double quadratic(const std::array<double, 3>& w, double x) { return w[0] + w[1] * x + w[2] * x * x; }

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    return perm;
}

} // namespace

SyntheticData generate_quadratic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t n = spec.n;

    SyntheticData out;
    out.alternate.assign(n, false);
    if (spec.mixture) {
        const auto count = static_cast<std::size_t>(
            std::llround(spec.mixture->fraction * static_cast<double>(n)));
        const std::vector<std::size_t> perm = permutation(n, rng);
        for (std::size_t k = 0; k < count; ++k) out.alternate[perm[k]] = true;
    }

    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform(kToyXLow, kToyXHigh);
        const double eps = rng.normal();
        if (out.alternate[i]) {
            const double s = spec.mixture->sigma.value_or(spec.sigma);
            y[i] = quadratic(spec.mixture->w_bar, x[i]) + s * eps;
        } else {
            y[i] = quadratic(spec.w_bar, x[i]) + spec.sigma * eps;
        }
    }
    out.data = Dataset(n, 1, std::move(x), std::move(y));
    out.data.feature_names = {"x"};

    if (spec.mixture) {
        const std::size_t m = spec.conforming_groups;
        std::vector<std::size_t> assignment(n);
        std::size_t next = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (out.alternate[i]) {
                assignment[i] = m;
            } else {
                assignment[i] = next;
                next = (next + 1) % m;
            }
        }
        out.groups = GroupStructure::uniform(std::move(assignment), m + 1);
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Splits one line on commas; double-quoted fields may contain commas and "".
std::vector<std::string> split_fields(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw CsvError("unterminated quoted field", line_no);
    fields.push_back(was_quoted ? cur : std::string(trim(cur)));
    return fields;
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        header = split_fields(line, line_no);
        break;
    }
    if (header.empty()) throw CsvError("missing header row", 0);
    if (header.size() < 2) throw CsvError("need at least one feature column and a label", line_no);

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line, line_no);
        if (fields.size() != header.size()) {
            throw RaggedRowError("expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(fields.size()),
                                 line_no);
        }
        rows.push_back(std::move(fields));
        row_lines.push_back(line_no);
    }
    if (rows.empty()) throw CsvError("no data rows", line_no);

    const std::size_t feature_cols = header.size() - 1;
    std::vector<bool> categorical(feature_cols, false);
    for (std::size_t j = 0; j < feature_cols; ++j) {
        const bool forced = std::find(schema.categorical.begin(), schema.categorical.end(),
                                      header[j]) != schema.categorical.end();
        categorical[j] = forced || !parse_number(rows.front()[j]).has_value();
    }

    std::vector<std::vector<std::string>> levels(feature_cols);
    for (std::size_t j = 0; j < feature_cols; ++j) {
        if (!categorical[j]) continue;
        std::set<std::string> seen;
        for (const auto& r : rows) seen.insert(r[j]);
        levels[j].assign(seen.begin(), seen.end());
    }

    Dataset out;
    for (std::size_t j = 0; j < feature_cols; ++j) {
        if (categorical[j]) {
            for (const auto& level : levels[j]) out.feature_names.push_back(header[j] + "=" + level);
        } else {
            out.feature_names.push_back(header[j]);
        }
    }
    out.cols = out.feature_names.size();
    out.rows = rows.size();
    out.features.reserve(out.rows * out.cols);
    out.targets.reserve(out.rows);

    std::map<std::string, double> label_code;
    if (schema.task == Task::classification) {
        std::set<std::string> labels;
        for (const auto& r : rows) labels.insert(r.back());
        if (labels.size() > 2) {
            throw TooManyClassesError("classification label has " + std::to_string(labels.size()) +
                                          " distinct values",
                                      0);
        }
        auto it = labels.begin();
        label_code[*it] = -1.0;
        if (labels.size() == 2) label_code[*std::next(it)] = 1.0;
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        for (std::size_t j = 0; j < feature_cols; ++j) {
            if (categorical[j]) {
                for (const auto& level : levels[j]) out.features.push_back(r[j] == level ? 1.0 : 0.0);
            } else {
                const auto v = parse_number(r[j]);
                if (!v) {
                    throw NumericParseError("column '" + header[j] + "': cannot parse '" + r[j] +
                                                "' as a number",
                                            row_lines[i]);
                }
                out.features.push_back(*v);
            }
        }
        if (schema.task == Task::classification) {
            out.targets.push_back(label_code.at(r.back()));
        } else {
            const auto v = parse_number(r.back());
            if (!v) {
                throw NumericParseError("label: cannot parse '" + r.back() + "' as a number",
                                        row_lines[i]);
            }
            out.targets.push_back(*v);
        }
    }
    out.validate();
    return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path.string(), 0);
    return read_csv(in, schema);
}

Dataset downsample_majority(const Dataset& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw InvalidArgument("ratio must be positive");
    std::vector<std::size_t> neg;
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < data.rows; ++i) {
        if (data.targets[i] == 1.0) {
            pos.push_back(i);
        } else if (data.targets[i] == -1.0) {
            neg.push_back(i);
        } else {
            throw InvalidArgument("downsampling needs labels in {-1, +1}");
        }
    }
    if (neg.empty() || pos.empty()) throw InvalidArgument("downsampling needs two classes");

    const bool neg_major = neg.size() >= pos.size();
    const auto& minority = neg_major ? pos : neg;
    std::vector<std::size_t> majority = neg_major ? neg : pos;
    const auto keep = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(minority.size()) - 1e-9));

    std::vector<std::size_t> kept(minority.begin(), minority.end());
    if (keep >= majority.size()) {
        kept.insert(kept.end(), majority.begin(), majority.end());
    } else {
        Rng rng(seed);
        rng.shuffle(std::span<std::size_t>(majority));
        kept.insert(kept.end(), majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(kept.begin(), kept.end());
    return data.subset(kept);
}

Split train_test_split(std::size_t n, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw InvalidArgument("train fraction must lie in (0, 1)");
    }
    if (n == 0) throw InvalidArgument("cannot split an empty dataset");
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    Rng rng(spec.seed);
    const std::vector<std::size_t> perm = permutation(n, rng);
    Split out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n) throw InvalidArgument("need 2 <= k <= n folds");
    Rng rng(seed);
    const std::vector<std::size_t> perm = permutation(n, rng);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t start = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                        perm.begin() + static_cast<std::ptrdiff_t>(start + size));
        std::sort(folds[f].begin(), folds[f].end());
        start += size;
    }
    return folds;
}

Standardizer Standardizer::fit(const Dataset& data) {
    if (data.rows == 0) throw InvalidArgument("cannot standardize an empty dataset");
    Standardizer s;
    s.mean.assign(data.cols, 0.0);
    s.scale.assign(data.cols, 1.0);
    const auto n = static_cast<double>(data.rows);
    for (std::size_t j = 0; j < data.cols; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < data.rows; ++i) sum += data.at(i, j);
        const double mu = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < data.rows; ++i) ss += (data.at(i, j) - mu) * (data.at(i, j) - mu);
        const double sd = std::sqrt(ss / n);
        s.mean[j] = mu;
        s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
    if (data.cols != mean.size()) throw InvalidArgument("standardizer column count mismatch");
    Dataset out = data;
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
            double& v = out.features[i * out.cols + j];
            v = (v - mean[j]) / scale[j];
        }
    }
    return out;
}

Dataset generate_credit_like(const CreditSpec& spec) {
    if (spec.n < 2) throw InvalidArgument("credit sample size must be at least 2");
    if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0)) {
        throw InvalidArgument("positive fraction must lie in (0, 1)");
    }
    constexpr std::size_t kCols = 14;
    // Per-feature class-mean shift (in noise units) and display scale.
    constexpr std::array<double, kCols> shift{1.0, 0.0, 0.6, 0.0, 0.8, 0.3, 0.0,
                                              0.0, 0.0, 0.5, 0.0, 0.2, 0.0, 0.4};
    constexpr std::array<double, kCols> scale{1.0, 12.0, 5.0, 1.0, 3.0, 2.0, 1.0,
                                              1.0, 1.0, 6.0, 1.0, 1.0, 150.0, 900.0};
    constexpr std::size_t kFlagA = 7;  // strongly predictive binary flag
    constexpr std::size_t kFlagB = 8;  // weakly predictive binary flag
    constexpr std::size_t kSkewed = 13;

    Rng rng(spec.seed);
    const auto n_pos = static_cast<std::size_t>(
        std::llround(spec.positive_fraction * static_cast<double>(spec.n)));
    std::vector<double> label(spec.n, -1.0);
    for (std::size_t i = 0; i < n_pos; ++i) label[i] = 1.0;
    rng.shuffle(std::span<double>(label));

    std::vector<double> features;
    features.reserve(spec.n * kCols);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const bool positive = label[i] > 0.0;
        const double sign = positive ? 1.0 : -1.0;
        for (std::size_t j = 0; j < kCols; ++j) {
            double v = 0.0;
            if (j == kFlagA) {
                v = rng.uniform() < (positive ? 0.85 : 0.25) ? 1.0 : 0.0;
            } else if (j == kFlagB) {
                v = rng.uniform() < (positive ? 0.6 : 0.4) ? 1.0 : 0.0;
            } else if (j == kSkewed) {
                v = std::exp(0.5 * sign * shift[j] + rng.normal());
            } else {
                v = 0.5 * sign * shift[j] + rng.normal();
            }
            features.push_back(scale[j] * v);
        }
    }
    Dataset out(spec.n, kCols, std::move(features), std::move(label));
    for (std::size_t j = 0; j < kCols; ++j) out.feature_names.push_back("A" + std::to_string(j + 1));
    return out;
}

} // namespace squant
