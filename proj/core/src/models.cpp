#include "squant/models.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace squant {

Dataset::Dataset(std::size_t rows_, std::size_t cols_, std::vector<double> features_,
                 std::vector<double> targets_)
    : rows(rows_), cols(cols_), features(std::move(features_)), targets(std::move(targets_)) {
    validate();
}

void Dataset::validate() const {
    if (features.size() != rows * cols) throw InvalidArgument("feature matrix has wrong size");
    if (targets.size() != rows) throw InvalidArgument("row count does not match target count");
    if (!feature_names.empty() && feature_names.size() != cols) {
        throw InvalidArgument("feature name count does not match column count");
    }
    for (double v : features) {
        if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
    }
    for (double v : targets) {
        if (!std::isfinite(v)) throw InvalidArgument("non-finite target value");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.rows = indices.size();
    out.cols = cols;
    out.feature_names = feature_names;
    out.features.reserve(indices.size() * cols);
    out.targets.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= rows) throw InvalidArgument("row index out of range");
        const auto r = row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.targets.push_back(targets[i]);
    }
    return out;
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "squared" || name == "least-squares") return LossKind::squared;
    if (name == "logistic") return LossKind::logistic;
    throw InvalidArgument("unknown loss: " + std::string(name));
}

std::string_view to_string(LossKind kind) noexcept {
    return kind == LossKind::squared ? "squared" : "logistic";
}

ModelSpec ModelSpec::parse(std::string_view model, LossKind loss, double reg) {
    if (reg < 0.0) throw InvalidArgument("regularization must be non-negative");
    ModelSpec spec;
    spec.loss = loss;
    spec.reg = reg;
    if (model == "linear") return spec;
    const auto colon = model.find(':');
    const auto head = model.substr(0, colon);
    if ((head == "poly" || head == "polynomial") && colon != std::string_view::npos) {
        const auto digits = model.substr(colon + 1);
        int degree = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), degree);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || degree < 1) {
            throw InvalidArgument("polynomial degree must be a positive integer");
        }
        spec.kind = ModelKind::polynomial;
        spec.degree = degree;
        return spec;
    }
    throw InvalidArgument("unknown model: " + std::string(model));
}

std::size_t ModelSpec::param_dim(std::size_t cols) const {
    if (kind == ModelKind::polynomial) return static_cast<std::size_t>(degree) + 1;
    return cols + 1;
}

double pointwise_loss(LossKind kind, double y, double z) {
    if (kind == LossKind::squared) {
        const double r = y - z;
        return 0.5 * r * r;
    }
    const double margin = y * z;
    return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double pointwise_loss_slope(LossKind kind, double y, double z) {
    if (kind == LossKind::squared) return z - y;
    const double margin = y * z;
    // -y * sigmoid(-margin)
    if (margin > 0.0) {
        const double e = std::exp(-margin);
        return -y * e / (1.0 + e);
    }
    return -y / (1.0 + std::exp(margin));
}

DesignMatrix::DesignMatrix(const Dataset& data, const ModelSpec& model)
    : rows_(data.rows), dim_(model.param_dim(data.cols)) {
    if (model.kind == ModelKind::polynomial && data.cols != 1) {
        throw InvalidArgument("polynomial models need exactly one input feature");
    }
    values_.reserve(rows_ * dim_);
    for (std::size_t i = 0; i < rows_; ++i) {
        values_.push_back(1.0);
        if (model.kind == ModelKind::polynomial) {
            const double x = data.at(i, 0);
            double power = 1.0;
            for (int k = 1; k <= model.degree; ++k) {
                power *= x;
                values_.push_back(power);
            }
        } else {
            const auto r = data.row(i);
            values_.insert(values_.end(), r.begin(), r.end());
        }
    }
}

std::vector<double> DesignMatrix::predict(std::span<const double> w) const {
    if (w.size() != dim_) throw InvalidArgument("parameter dimension mismatch");
    std::vector<double> z(rows_);
    for (std::size_t i = 0; i < rows_; ++i) z[i] = dot(row(i), w);
    return z;
}

std::vector<double> predict(const Dataset& data, const ModelSpec& model,
                            std::span<const double> w) {
    return DesignMatrix(data, model).predict(w);
}

PointwiseLossMap::PointwiseLossMap(const Dataset& data, const ModelSpec& model)
    : design_(data, model), targets_(data.targets), loss_(model.loss) {
    if (targets_.size() != design_.rows()) {
        throw InvalidArgument("row count does not match target count");
    }
}

std::vector<double> PointwiseLossMap::eval(std::span<const double> w) const {
    std::vector<double> z = design_.predict(w);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = pointwise_loss(loss_, targets_[i], z[i]);
    return z;
}

std::vector<double> PointwiseLossMap::adjoint_apply(std::span<const double> w,
                                                    std::span<const double> q) const {
    if (q.size() != size()) throw InvalidArgument("weight vector has wrong length");
    const std::vector<double> z = design_.predict(w);
    std::vector<double> g(dim(), 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (q[i] == 0.0) continue;
        const double coef = q[i] * pointwise_loss_slope(loss_, targets_[i], z[i]);
        const auto r = design_.row(i);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += coef * r[j];
    }
    return g;
}

PointwiseLossMap pointwise_loss_map(const Dataset& data, const ModelSpec& model) {
    return PointwiseLossMap(data, model);
}

GroupStructure GroupStructure::uniform(std::vector<std::size_t> assignment, std::size_t groups) {
    if (groups == 0) throw InvalidArgument("at least one group is required");
    return GroupStructure{std::move(assignment),
                          std::vector<double>(groups, 1.0 / static_cast<double>(groups))};
}

std::vector<std::size_t> GroupStructure::group_sizes() const {
    std::vector<std::size_t> sizes(groups(), 0);
    for (std::size_t g : assignment) {
        if (g >= sizes.size()) throw InvalidArgument("group index out of range");
        ++sizes[g];
    }
    return sizes;
}

void GroupStructure::validate(std::size_t rows) const {
    if (assignment.size() != rows) throw InvalidArgument("group assignment length mismatch");
    if (alpha.empty()) throw InvalidArgument("at least one group is required");
    for (std::size_t size : group_sizes()) {
        if (size == 0) throw InvalidArgument("empty group");
    }
    double total = 0.0;
    for (double a : alpha) {
        if (!(a >= 0.0)) throw InvalidArgument("group weights must be non-negative");
        total += a;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("group weights must sum to 1");
}

GroupedLossMap::GroupedLossMap(const Dataset& data, const ModelSpec& model, GroupStructure groups)
    : rows_(data, model), groups_(std::move(groups)) {
    groups_.validate(data.rows);
    for (std::size_t size : groups_.group_sizes()) {
        inv_sizes_.push_back(1.0 / static_cast<double>(size));
    }
}

std::vector<double> GroupedLossMap::eval(std::span<const double> w) const {
    const std::vector<double> losses = rows_.eval(w);
    std::vector<double> sums(groups_.groups(), 0.0);
    for (std::size_t i = 0; i < losses.size(); ++i) sums[groups_.assignment[i]] += losses[i];
    for (std::size_t g = 0; g < sums.size(); ++g) sums[g] *= inv_sizes_[g];
    return sums;
}

std::vector<double> GroupedLossMap::adjoint_apply(std::span<const double> w,
                                                  std::span<const double> q) const {
    if (q.size() != size()) throw InvalidArgument("weight vector has wrong length");
    std::vector<double> row_weights(rows_.size());
    for (std::size_t i = 0; i < row_weights.size(); ++i) {
        const std::size_t g = groups_.assignment[i];
        row_weights[i] = q[g] * inv_sizes_[g];
    }
    return rows_.adjoint_apply(w, row_weights);
}

GroupedLossMap grouped_loss_map(const Dataset& data, const ModelSpec& model,
                                GroupStructure groups) {
    return GroupedLossMap(data, model, std::move(groups));
}

double conformity(std::span<const double> pi, std::span<const double> alpha) {
    if (pi.size() != alpha.size()) throw InvalidArgument("conformity: length mismatch");
    double level = 1.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        if (pi[i] < 0.0 || alpha[i] < 0.0) {
            throw InvalidArgument("conformity: weights must be non-negative");
        }
        if (pi[i] > 0.0) level = std::min(level, alpha[i] / pi[i]);
    }
    return level;
}

std::vector<double> group_metrics(const Dataset& data, const ModelSpec& model,
                                  const GroupStructure& groups, std::span<const double> w) {
    ModelSpec plain = model;
    plain.reg = 0.0;
    return GroupedLossMap(data, plain, groups).eval(w);
}

ClassificationMetrics classification_metrics(const Dataset& data, const ModelSpec& model,
                                             std::span<const double> w) {
    const std::vector<double> z = predict(data, model, w);
    std::size_t correct = 0;
    std::size_t predicted_positive = 0;
    std::size_t true_positive = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double label = z[i] >= 0.0 ? 1.0 : -1.0;
        if (label == data.targets[i]) ++correct;
        if (label > 0.0) {
            ++predicted_positive;
            if (data.targets[i] > 0.0) ++true_positive;
        }
    }
    ClassificationMetrics m;
    if (!z.empty()) m.accuracy = static_cast<double>(correct) / static_cast<double>(z.size());
    if (predicted_positive > 0) {
        m.precision = static_cast<double>(true_positive) / static_cast<double>(predicted_positive);
    }
    return m;
}

} // namespace squant
