#pragma once

// Experiment drivers behind the `squant` command-line tool. Each driver
// returns a JSON report plus the per-row predictions it was computed from.

#include <cstddef>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "squant/data.hpp"
#include "squant/models.hpp"
#include "squant/optim.hpp"
#include "squant/smoothing.hpp"

namespace squant::experiments {

using Json = nlohmann::ordered_json;

/// Usage or data problem; the CLI maps it to exit code 2.
class UsageError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct PredictionRow {
    std::string split; ///< "train" or "test"
    std::size_t replicate = 0; ///< seed index for multi-seed studies
    std::size_t row = 0;       ///< row of the source dataset
    std::string model;
    std::optional<std::size_t> group;
    double target = 0.0;
    double prediction = 0.0; ///< regression output or classification score
};

struct ExperimentOutput {
    Json report;
    Task task = Task::regression;
    std::vector<PredictionRow> predictions;
    /// Additional CSV files, written verbatim next to the report.
    std::vector<std::pair<std::string, std::string>> extra_files;
};

/// report.json, predictions.csv and the extra files.
void write_outputs(const std::filesystem::path& dir, const ExperimentOutput& out);
std::string predictions_csv(const std::vector<PredictionRow>& rows, Task task);
/// %.17g: round-trips exactly.
std::string format_double(double v);

struct RegressionMetrics {
    double mean = 0.0;
    double p80 = 0.0;
    double p90 = 0.0;
    double p95 = 0.0;
    double p98 = 0.0;
    double max = 0.0;
};

/// Absolute residual statistics; percentiles use the same left-continuous
/// quantile as the core library.
RegressionMetrics regression_metrics(std::span<const double> targets,
                                     std::span<const double> predictions);
Json to_json(const RegressionMetrics& m);
Json to_json(const ClassificationMetrics& m);
Json to_json(const OptimResult& r);

/// Trains w for mean loss (tail = nullopt) or for the smoothed superquantile.
struct Trainer {
    ModelSpec model;
    std::optional<double> p; ///< nullopt: ERM
    SmoothingKind smoothing = SmoothingKind::euclidean;
    double nu = 0.1;
    OptimConfig optim{};

    static Trainer erm(const ModelSpec& model);
    static Trainer superquantile(const ModelSpec& model, double p, SmoothingKind smoothing, double nu);

    [[nodiscard]] OptimResult fit(const LossMap& loss_map, std::size_t ridge_count,
                                  std::vector<double> w0) const;
};

struct ToyRegConfig {
    std::size_t n = 1000;
    double sigma = 1.0;
    std::array<double, 3> w_bar{1.0, 2.0, 1.0};
    std::array<double, 3> alt_w_bar{-6.0, 4.0, 0.0};
    double alt_fraction = 0.2;
    double p = 0.9;
    double nu = 0.1;
    SmoothingKind smoothing = SmoothingKind::euclidean;
    double reg = 0.0;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};
ExperimentOutput run_toyreg(const ToyRegConfig& cfg);

/// Shared by the federated and fairness studies: four conforming devices and
/// one non-conforming device holding 20% of the rows.
struct FederatedConfig {
    std::size_t n = 1000;
    double sigma = 1.0;
    std::array<double, 3> w_bar{1.0, 2.0, 1.0};
    std::array<double, 3> alt_w_bar{-6.0, 4.0, 0.0};
    double p = 0.8;
    double nu = 0.1;
    SmoothingKind smoothing = SmoothingKind::euclidean;
    double reg = 0.0;
    std::uint64_t seed = 0;
};
ExperimentOutput run_federated(const FederatedConfig& cfg);
ExperimentOutput run_fairness(const FederatedConfig& cfg);

struct AbaloneConfig {
    double p = 0.98;
    double nu = 0.1;
    SmoothingKind smoothing = SmoothingKind::euclidean;
    double reg = 1.0;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};
ExperimentOutput run_abalone(const Dataset& data, const AbaloneConfig& cfg);

struct CreditConfig {
    std::vector<double> p_grid{0.8, 0.85, 0.9, 0.95, 0.99};
    std::size_t seeds = 5;
    std::size_t folds = 5;
    double downsample_ratio = 0.1;
    double nu = 0.1;
    SmoothingKind smoothing = SmoothingKind::euclidean;
    double reg = 1.0;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::string source = "csv";
};
ExperimentOutput run_credit(const Dataset& data, const CreditConfig& cfg);

struct ConvergenceConfig {
    double p = 0.9;
    std::vector<std::size_t> sizes{100, 1000, 10000, 100000};
    std::size_t reference_size = 1000000;
    std::size_t replicates = 50;
    std::uint64_t seed = 0;
};
ExperimentOutput run_convergence(const ConvergenceConfig& cfg);

struct FitConfig {
    ModelSpec model;
    double p = 0.9;
    double nu = 0.1;
    SmoothingKind smoothing = SmoothingKind::euclidean;
    double train_fraction = 0.8;
    bool standardize = false;
    std::uint64_t seed = 0;
};
/// Trains the ERM baseline and the smoothed superquantile model.
ExperimentOutput run_fit(const Dataset& data, Task task, const FitConfig& cfg);

struct EvalConfig {
    double p = 0.5;
    std::optional<double> nu;
    SmoothingKind smoothing = SmoothingKind::euclidean;
};
Json run_eval(const std::vector<double>& values, const EvalConfig& cfg);

struct SweepConfig {
    double p = 0.5;
    SmoothingKind smoothing = SmoothingKind::euclidean;
    /// Absolute nu values; empty means 10^k range for k = -9, -8.5, ..., 9.
    std::vector<double> grid;
};
/// Smoothed value and weights across a nu grid for a fixed loss vector.
ExperimentOutput run_sweep_nu(const std::vector<double>& losses, const SweepConfig& cfg);

/// Loss vector L(w) of a dataset under a model.
std::vector<double> losses_at(const Dataset& data, const ModelSpec& model, std::span<const double> w);

} // namespace squant::experiments
