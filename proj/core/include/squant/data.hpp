#pragma once

// Synthetic generators, CSV ingestion, splits and the majority-class shift.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "squant/error.hpp"
#include "squant/models.hpp"

namespace squant {

/// Input interval of the quadratic toy generator.
inline constexpr double kToyXLow = -1.0;
inline constexpr double kToyXHigh = 3.0;

struct Mixture {
    double fraction = 0.2;                 ///< share of alternate rows, in (0, 1)
    std::array<double, 3> w_bar{};         ///< alternate coefficients
    std::optional<double> sigma;           ///< alternate noise; defaults to the main sigma
};

/// y = w0 + w1 x + w2 x^2 + eps, x ~ U[kToyXLow, kToyXHigh], eps ~ N(0, sigma^2).
struct SyntheticSpec {
    std::size_t n = 100;
    std::array<double, 3> w_bar{0.0, 0.0, 0.0};
    double sigma = 1.0;
    std::optional<Mixture> mixture;
    std::uint64_t seed = 0;
    /// Number of groups the conforming rows are dealt into (round robin);
    /// alternate rows always form the last group.
    std::size_t conforming_groups = 1;

    void validate() const;
};

struct SyntheticData {
    Dataset data;                         ///< one feature column "x"
    std::vector<bool> alternate;          ///< row drawn from the mixture component
    std::optional<GroupStructure> groups; ///< present iff a mixture is configured; uniform alpha
};

SyntheticData generate_quadratic(const SyntheticSpec& spec);

enum class Task { regression, classification };

struct CsvSchema {
    Task task = Task::regression;
    /// Columns forced to one-hot encoding. Other columns are categorical iff
    /// their first data value does not parse as a number.
    std::vector<std::string> categorical;
};

class CsvError : public InvalidArgument {
public:
    CsvError(const std::string& what, std::size_t line) : InvalidArgument(what), line_(line) {}
    /// 1-based line number in the file (0 when not tied to a line).
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class RaggedRowError : public CsvError {
    using CsvError::CsvError;
};
class TooManyClassesError : public CsvError {
    using CsvError::CsvError;
};
class NumericParseError : public CsvError {
    using CsvError::CsvError;
};

/// Comma separated, one header row, label in the last column. Feature order
/// follows the file; a categorical column expands in place into one column per
/// level ("name=level"), levels in lexicographic order. Classification labels
/// map to -1 / +1 by lexicographic order of the two distinct strings.
Dataset read_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Keeps every minority row and a uniform random subset of
/// ceil(ratio |minority|) majority rows, preserving row order. On equal class
/// counts the -1 class is treated as the majority.
Dataset downsample_majority(const Dataset& data, double ratio = 0.1, std::uint64_t seed = 0);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train; ///< ascending
    std::vector<std::size_t> test;  ///< ascending
};

/// Random partition with round(train_fraction n) training rows, clamped so
/// that both sides are non-empty when n >= 2.
Split train_test_split(std::size_t n, const SplitSpec& spec);

/// k folds of a random permutation; fold sizes differ by at most one, each fold
/// sorted ascending.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

/// Per-column affine map to zero mean, unit variance, fitted on one dataset.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Dataset& data);
    [[nodiscard]] Dataset apply(const Dataset& data) const;
};

/// Binary classification data shaped like the Australian credit table:
/// 690 rows by default, 14 mixed-scale features, roughly 44% positive rows.
struct CreditSpec {
    std::size_t n = 690;
    double positive_fraction = 0.445;
    std::uint64_t seed = 0;
};

Dataset generate_credit_like(const CreditSpec& spec);

} // namespace squant
