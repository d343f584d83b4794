#pragma once

// Prediction functions, losses and group structures instantiating LossMap.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squant/oracles.hpp"

namespace squant {

/// Row-major n x k feature matrix with one target per row. Classification
/// targets are -1 / +1.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> features;
    std::vector<double> targets;
    std::vector<std::string> feature_names;

    Dataset() = default;
    Dataset(std::size_t rows, std::size_t cols, std::vector<double> features,
            std::vector<double> targets);

    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {features.data() + i * cols, cols};
    }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return features[i * cols + j]; }

    /// Throws InvalidArgument on shape mismatch or non-finite entries.
    void validate() const;
    /// Rows in the given order.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
};

enum class ModelKind { linear, polynomial };
enum class LossKind { squared, logistic };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind) noexcept;

struct ModelSpec {
    ModelKind kind = ModelKind::linear;
    int degree = 1; ///< polynomial only; univariate features
    LossKind loss = LossKind::squared;
    double reg = 0.0;

    /// "linear" or "poly:D" / "polynomial:D".
    static ModelSpec parse(std::string_view model, LossKind loss, double reg = 0.0);

    /// Number of parameters (intercept included) for `cols` input features.
    [[nodiscard]] std::size_t param_dim(std::size_t cols) const;
};

/// squared: (y - z)^2 / 2; logistic: log(1 + exp(-y z)), overflow safe.
double pointwise_loss(LossKind kind, double y, double z);
/// d loss / d z.
double pointwise_loss_slope(LossKind kind, double y, double z);

/// Feature expansion phi(x) such that the prediction is w^T phi(x):
/// [1, x_1, ..., x_k] for linear, [1, x, ..., x^D] for polynomial.
class DesignMatrix {
public:
    DesignMatrix(const Dataset& data, const ModelSpec& model);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }
    [[nodiscard]] std::vector<double> predict(std::span<const double> w) const;

private:
    std::size_t rows_;
    std::size_t dim_;
    std::vector<double> values_;
};

std::vector<double> predict(const Dataset& data, const ModelSpec& model, std::span<const double> w);

/// L_i(w) = loss(y_i, w^T phi(x_i)), one component per row.
class PointwiseLossMap final : public LossMap {
public:
    PointwiseLossMap(const Dataset& data, const ModelSpec& model);

    std::size_t dim() const override { return design_.dim(); }
    std::size_t size() const override { return design_.rows(); }
    std::vector<double> eval(std::span<const double> w) const override;
    std::vector<double> adjoint_apply(std::span<const double> w,
                                      std::span<const double> q) const override;

private:
    DesignMatrix design_;
    std::vector<double> targets_;
    LossKind loss_;
};

PointwiseLossMap pointwise_loss_map(const Dataset& data, const ModelSpec& model);

/// Row -> group assignment (0-based) with mixture weights alpha.
struct GroupStructure {
    std::vector<std::size_t> assignment;
    std::vector<double> alpha;

    [[nodiscard]] std::size_t groups() const noexcept { return alpha.size(); }
    /// Uniform alpha over `groups` groups.
    static GroupStructure uniform(std::vector<std::size_t> assignment, std::size_t groups);
    /// Throws InvalidArgument on empty groups, bad indices or alpha not summing to 1.
    void validate(std::size_t rows) const;
    [[nodiscard]] std::vector<std::size_t> group_sizes() const;
};

/// L_g(w) = average loss over the rows of group g.
class GroupedLossMap final : public LossMap {
public:
    GroupedLossMap(const Dataset& data, const ModelSpec& model, GroupStructure groups);

    std::size_t dim() const override { return rows_.dim(); }
    std::size_t size() const override { return groups_.groups(); }
    std::vector<double> eval(std::span<const double> w) const override;
    std::vector<double> adjoint_apply(std::span<const double> w,
                                      std::span<const double> q) const override;

private:
    PointwiseLossMap rows_;
    GroupStructure groups_;
    std::vector<double> inv_sizes_;
};

GroupedLossMap grouped_loss_map(const Dataset& data, const ModelSpec& model,
                                GroupStructure groups);

/// min_i alpha_i / pi_i over the support of pi; 0 when pi charges a group
/// with alpha_i = 0.
double conformity(std::span<const double> pi, std::span<const double> alpha);

/// Per-group mean losses (no regularization).
std::vector<double> group_metrics(const Dataset& data, const ModelSpec& model,
                                  const GroupStructure& groups, std::span<const double> w);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0; ///< positive class +1; 0 when nothing is predicted positive
};

ClassificationMetrics classification_metrics(const Dataset& data, const ModelSpec& model,
                                             std::span<const double> w);

} // namespace squant
