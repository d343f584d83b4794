#include "experiments.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "squant/oracles.hpp"
#include "squant/superquantile.hpp"

namespace squant::experiments {

namespace {

// splitmix64 finalizer: independent seed streams from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double mean_of(std::span<const double> v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Json array3(const std::array<double, 3>& a) { return Json::array({a[0], a[1], a[2]}); }

void add_rows(std::vector<PredictionRow>& out, const std::string& split, std::size_t replicate,
              const std::string& model, std::span<const std::size_t> rows,
              std::span<const double> targets, std::span<const double> predictions,
              const std::vector<std::size_t>* groups = nullptr) {
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        PredictionRow r;
        r.split = split;
        r.replicate = replicate;
        r.row = rows[k];
        r.model = model;
        if (groups) r.group = (*groups)[k];
        r.target = targets[k];
        r.prediction = predictions[k];
        out.push_back(std::move(r));
    }
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

std::vector<std::size_t> pick(const std::vector<std::size_t>& v, std::span<const std::size_t> idx) {
    std::vector<std::size_t> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

Json model_entry(const OptimResult& r, const ModelSpec& model, std::optional<double> p) {
    Json j;
    j["objective"] = p ? "smoothed_superquantile" : "erm";
    if (p) j["p"] = *p;
    j["loss"] = std::string(to_string(model.loss));
    j["reg"] = model.reg;
    j["w"] = r.w_star;
    j["optimizer"] = to_json(r);
    return j;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string predictions_csv(const std::vector<PredictionRow>& rows, Task task) {
    std::ostringstream out;
    if (task == Task::regression) {
        out << "split,replicate,row,model,group,target,prediction,residual\n";
    } else {
        out << "split,replicate,row,model,group,target,score,predicted\n";
    }
    for (const auto& r : rows) {
        out << r.split << ',' << r.replicate << ',' << r.row << ',' << r.model << ',';
        if (r.group) out << *r.group;
        out << ',' << format_double(r.target) << ',' << format_double(r.prediction) << ',';
        if (task == Task::regression) {
            out << format_double(std::abs(r.target - r.prediction));
        } else {
            out << (r.prediction >= 0.0 ? 1 : -1);
        }
        out << '\n';
    }
    return out.str();
}

void write_outputs(const std::filesystem::path& dir, const ExperimentOutput& out) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw UsageError("cannot write " + (dir / name).string());
        f << text;
    };
    write("report.json", out.report.dump(2) + "\n");
    if (!out.predictions.empty()) write("predictions.csv", predictions_csv(out.predictions, out.task));
    for (const auto& [name, text] : out.extra_files) write(name, text);
}

RegressionMetrics regression_metrics(std::span<const double> targets,
                                     std::span<const double> predictions) {
    if (targets.size() != predictions.size() || targets.empty()) {
        throw InvalidArgument("regression metrics need matching non-empty vectors");
    }
    std::vector<double> r(targets.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::abs(targets[i] - predictions[i]);
    RegressionMetrics m;
    m.mean = mean_of(r);
    m.max = *std::max_element(r.begin(), r.end());
    const EmpiricalSample s(std::move(r));
    m.p80 = quantile(s, TailSpec(0.8));
    m.p90 = quantile(s, TailSpec(0.9));
    m.p95 = quantile(s, TailSpec(0.95));
    m.p98 = quantile(s, TailSpec(0.98));
    return m;
}

Json to_json(const RegressionMetrics& m) {
    return Json{{"mean", m.mean}, {"p80", m.p80}, {"p90", m.p90},
                {"p95", m.p95},   {"p98", m.p98}, {"max", m.max}};
}

Json to_json(const ClassificationMetrics& m) {
    return Json{{"accuracy", m.accuracy}, {"precision", m.precision}};
}

Json to_json(const OptimResult& r) {
    Json j{{"status", std::string(to_string(r.status))},
           {"value", r.value},
           {"grad_norm", r.grad_norm},
           {"iterations", r.iterations},
           {"evaluations", r.evaluations}};
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

Trainer Trainer::erm(const ModelSpec& model) {
    Trainer t;
    t.model = model;
    return t;
}

Trainer Trainer::superquantile(const ModelSpec& model, double p, SmoothingKind smoothing, double nu) {
    Trainer t;
    t.model = model;
    t.p = p;
    t.smoothing = smoothing;
    t.nu = nu;
    return t;
}

OptimResult Trainer::fit(const LossMap& loss_map, std::size_t ridge_count,
                         std::vector<double> w0) const {
    if (!p) return minimize(make_erm_objective(loss_map, model.reg, ridge_count), std::move(w0), optim);
    const Oracle f = make_smoothed_objective(loss_map, TailSpec(*p), SmoothingSpec(smoothing, nu),
                                             model.reg, ridge_count);
    return minimize(f, std::move(w0), optim);
}

std::vector<double> losses_at(const Dataset& data, const ModelSpec& model,
                              std::span<const double> w) {
    return PointwiseLossMap(data, model).eval(w);
}

// ---------------------------------------------------------------------------

ExperimentOutput run_toyreg(const ToyRegConfig& cfg) {
    SyntheticSpec spec;
    spec.n = cfg.n;
    spec.w_bar = cfg.w_bar;
    spec.sigma = cfg.sigma;
    spec.mixture = Mixture{cfg.alt_fraction, cfg.alt_w_bar, std::nullopt};
    spec.seed = derive_seed(cfg.seed, 0);
    const SyntheticData toy = generate_quadratic(spec);
    const Split split = train_test_split(cfg.n, SplitSpec{cfg.train_fraction, derive_seed(cfg.seed, 1)});
    const Dataset train = toy.data.subset(split.train);
    const Dataset test = toy.data.subset(split.test);

    ModelSpec model = ModelSpec::parse("poly:2", LossKind::squared, cfg.reg);
    const PointwiseLossMap map(train, model);
    const Trainer erm = Trainer::erm(model);
    const Trainer sq = Trainer::superquantile(model, cfg.p, cfg.smoothing, cfg.nu);
    const OptimResult erm_fit = erm.fit(map, train.rows, std::vector<double>(3, 0.0));
    const OptimResult sq_fit = sq.fit(map, train.rows, erm_fit.w_star);

    ExperimentOutput out;
    std::vector<std::size_t> group(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) group[i] = toy.alternate[i] ? 1 : 0;
    const auto train_groups = pick(group, split.train);
    const auto test_groups = pick(group, split.test);

    Json models = Json::object();
    const std::pair<std::string, const OptimResult*> fits[] = {{"erm", &erm_fit},
                                                               {"superquantile", &sq_fit}};
    for (const auto& [name, fit] : fits) {
        Json entry = model_entry(*fit, model, name == "erm" ? std::nullopt : std::optional(cfg.p));
        const auto z_train = predict(train, model, fit->w_star);
        const auto z_test = predict(test, model, fit->w_star);
        entry["train"] = to_json(regression_metrics(train.targets, z_train));
        entry["test"] = to_json(regression_metrics(test.targets, z_test));
        models[name] = entry;
        add_rows(out.predictions, "train", 0, name, split.train, train.targets, z_train, &train_groups);
        add_rows(out.predictions, "test", 0, name, split.test, test.targets, z_test, &test_groups);
    }

    const auto& e = models["erm"]["test"];
    const auto& s = models["superquantile"]["test"];
    out.report["experiment"] = "toyreg";
    out.report["seed"] = cfg.seed;
    out.report["config"] = {{"n", cfg.n},
                            {"sigma", cfg.sigma},
                            {"w_bar", array3(cfg.w_bar)},
                            {"alt_w_bar", array3(cfg.alt_w_bar)},
                            {"alt_fraction", cfg.alt_fraction},
                            {"x_interval", Json::array({kToyXLow, kToyXHigh})},
                            {"p", cfg.p},
                            {"nu", cfg.nu},
                            {"smoothing", std::string(to_string(cfg.smoothing))},
                            {"reg", cfg.reg},
                            {"train_fraction", cfg.train_fraction}};
    out.report["models"] = models;
    out.report["pattern"] = {
        {"superquantile_lower_p90", s["p90"].get<double>() < e["p90"].get<double>()},
        {"superquantile_lower_p95", s["p95"].get<double>() < e["p95"].get<double>()},
        {"superquantile_higher_mean", s["mean"].get<double>() > e["mean"].get<double>()}};
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct FederatedRun {
    SyntheticData train;
    SyntheticData test;
    ModelSpec model;
    OptimResult erm;
    OptimResult pooled;
    OptimResult grouped;
};

FederatedRun run_federated_models(const FederatedConfig& cfg) {
    SyntheticSpec spec;
    spec.n = cfg.n;
    spec.w_bar = cfg.w_bar;
    spec.sigma = cfg.sigma;
    spec.mixture = Mixture{0.2, cfg.alt_w_bar, std::nullopt};
    spec.conforming_groups = 4;
    spec.seed = derive_seed(cfg.seed, 0);

    FederatedRun run;
    run.train = generate_quadratic(spec);
    spec.seed = derive_seed(cfg.seed, 1);
    run.test = generate_quadratic(spec);
    run.model = ModelSpec::parse("poly:2", LossKind::squared, cfg.reg);

    const Dataset& data = run.train.data;
    const PointwiseLossMap rows(data, run.model);
    const GroupedLossMap devices(data, run.model, *run.train.groups);
    const Trainer erm = Trainer::erm(run.model);
    const Trainer sq = Trainer::superquantile(run.model, cfg.p, cfg.smoothing, cfg.nu);
    run.erm = erm.fit(rows, data.rows, std::vector<double>(3, 0.0));
    run.pooled = sq.fit(rows, data.rows, run.erm.w_star);
    run.grouped = sq.fit(devices, data.rows, run.erm.w_star);
    return run;
}

Json federated_config(const FederatedConfig& cfg) {
    return Json{{"n", cfg.n},
                {"sigma", cfg.sigma},
                {"w_bar", array3(cfg.w_bar)},
                {"alt_w_bar", array3(cfg.alt_w_bar)},
                {"devices", 5},
                {"non_conforming_fraction", 0.2},
                {"x_interval", Json::array({kToyXLow, kToyXHigh})},
                {"p", cfg.p},
                {"nu", cfg.nu},
                {"smoothing", std::string(to_string(cfg.smoothing))},
                {"reg", cfg.reg}};
}

const char* const kFederatedModels[] = {"erm", "superquantile", "federated_superquantile"};

void federated_predictions(const FederatedRun& run, ExperimentOutput& out) {
    const std::pair<const char*, const OptimResult*> fits[] = {
        {kFederatedModels[0], &run.erm},
        {kFederatedModels[1], &run.pooled},
        {kFederatedModels[2], &run.grouped}};
    for (const auto& [name, fit] : fits) {
        for (const auto* part : {&run.train, &run.test}) {
            const auto z = predict(part->data, run.model, fit->w_star);
            add_rows(out.predictions, part == &run.train ? "train" : "test", 0, name,
                     iota_rows(part->data.rows), part->data.targets, z,
                     &part->groups->assignment);
        }
    }
}

// Majority (devices 0-3) versus minority (device 4) mean losses.
std::vector<double> subgroup_losses(const SyntheticData& part, const ModelSpec& model,
                                    std::span<const double> w) {
    std::vector<std::size_t> assignment;
    for (std::size_t g : part.groups->assignment) assignment.push_back(g < 4 ? 0 : 1);
    return group_metrics(part.data, model, GroupStructure::uniform(std::move(assignment), 2), w);
}

} // namespace

ExperimentOutput run_federated(const FederatedConfig& cfg) {
    const FederatedRun run = run_federated_models(cfg);
    ExperimentOutput out;
    Json models = Json::object();
    const std::pair<const char*, const OptimResult*> fits[] = {
        {kFederatedModels[0], &run.erm},
        {kFederatedModels[1], &run.pooled},
        {kFederatedModels[2], &run.grouped}};
    for (const auto& [name, fit] : fits) {
        Json entry = model_entry(*fit, run.model, fit == &run.erm ? std::nullopt : std::optional(cfg.p));
        if (fit == &run.grouped) entry["objective"] = "smoothed_superquantile_over_devices";
        for (const auto* part : {&run.train, &run.test}) {
            const auto losses = group_metrics(part->data, run.model, *part->groups, fit->w_star);
            Json j{{"per_device_loss", losses},
                   {"worst_device_loss", *std::max_element(losses.begin(), losses.end())},
                   {"mean_loss", mean_of(losses_at(part->data, run.model, fit->w_star))}};
            entry[part == &run.train ? "train" : "test"] = j;
        }
        models[name] = entry;
    }
    federated_predictions(run, out);
    out.report["experiment"] = "federated";
    out.report["seed"] = cfg.seed;
    out.report["config"] = federated_config(cfg);
    out.report["models"] = models;
    return out;
}

ExperimentOutput run_fairness(const FederatedConfig& cfg) {
    const FederatedRun run = run_federated_models(cfg);
    ExperimentOutput out;
    Json table = Json::object();
    const std::pair<const char*, const OptimResult*> fits[] = {
        {kFederatedModels[0], &run.erm},
        {kFederatedModels[1], &run.pooled},
        {kFederatedModels[2], &run.grouped}};
    for (const auto& [name, fit] : fits) {
        Json entry;
        entry["optimizer"] = to_json(*fit);
        entry["w"] = fit->w_star;
        for (const auto* part : {&run.train, &run.test}) {
            const auto l = subgroup_losses(*part, run.model, fit->w_star);
            entry[part == &run.train ? "train" : "test"] = Json{
                {"L1", l[0]}, {"L2", l[1]}, {"gap", std::abs(l[0] - l[1])}, {"max", std::max(l[0], l[1])}};
        }
        table[name] = entry;
    }
    federated_predictions(run, out);

    auto smallest = [&](const char* split, const char* field) {
        const double g = table["federated_superquantile"][split][field].get<double>();
        return g < table["erm"][split][field].get<double>() &&
               g < table["superquantile"][split][field].get<double>();
    };
    out.report["experiment"] = "fairness";
    out.report["seed"] = cfg.seed;
    out.report["config"] = federated_config(cfg);
    out.report["subgroups"] = {{"L1", "devices 0-3 (conforming)"}, {"L2", "device 4 (non-conforming)"}};
    out.report["table"] = table;
    out.report["pattern"] = {{"grouped_smallest_gap_train", smallest("train", "gap")},
                             {"grouped_smallest_max_train", smallest("train", "max")},
                             {"grouped_smallest_gap_test", smallest("test", "gap")},
                             {"grouped_smallest_max_test", smallest("test", "max")}};
    return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_abalone(const Dataset& data, const AbaloneConfig& cfg) {
    const Split split = train_test_split(data.rows, SplitSpec{cfg.train_fraction, derive_seed(cfg.seed, 0)});
    const Dataset raw_train = data.subset(split.train);
    const Standardizer scaler = Standardizer::fit(raw_train);
    const Dataset train = scaler.apply(raw_train);
    const Dataset test = scaler.apply(data.subset(split.test));

    const ModelSpec model = ModelSpec::parse("linear", LossKind::squared, cfg.reg);
    const PointwiseLossMap map(train, model);
    const std::size_t dim = model.param_dim(train.cols);
    const OptimResult erm = Trainer::erm(model).fit(map, train.rows, std::vector<double>(dim, 0.0));
    const OptimResult sq = Trainer::superquantile(model, cfg.p, cfg.smoothing, cfg.nu).fit(map, train.rows, erm.w_star);

    ExperimentOutput out;
    Json models = Json::object();
    for (const auto& [name, fit] : {std::pair{"erm", &erm}, std::pair{"superquantile", &sq}}) {
        Json entry = model_entry(*fit, model, fit == &erm ? std::nullopt : std::optional(cfg.p));
        const auto z_train = predict(train, model, fit->w_star);
        const auto z_test = predict(test, model, fit->w_star);
        entry["train"] = to_json(regression_metrics(train.targets, z_train));
        entry["test"] = to_json(regression_metrics(test.targets, z_test));
        models[name] = entry;
        add_rows(out.predictions, "train", 0, name, split.train, train.targets, z_train);
        add_rows(out.predictions, "test", 0, name, split.test, test.targets, z_test);
    }
    out.report["experiment"] = "abalone";
    out.report["seed"] = cfg.seed;
    out.report["config"] = {{"rows", data.rows},
                            {"features", data.feature_names},
                            {"p", cfg.p},
                            {"nu", cfg.nu},
                            {"smoothing", std::string(to_string(cfg.smoothing))},
                            {"reg", cfg.reg},
                            {"train_fraction", cfg.train_fraction},
                            {"standardized", true}};
    out.report["models"] = models;
    return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_credit(const Dataset& data, const CreditConfig& cfg) {
    for (double t : data.targets) {
        if (t != 1.0 && t != -1.0) throw UsageError("credit experiment needs labels in {-1, +1}");
    }
    if (cfg.p_grid.empty()) throw UsageError("empty p grid");
    const ModelSpec model = ModelSpec::parse("linear", LossKind::logistic, cfg.reg);
    const std::size_t dim = model.param_dim(data.cols);

    ExperimentOutput out;
    out.task = Task::classification;
    Json runs = Json::array();
    std::vector<double> acc_erm, acc_sq, prec_erm, prec_sq;

    for (std::size_t r = 0; r < cfg.seeds; ++r) {
        const std::uint64_t run_seed = derive_seed(cfg.seed, r);
        const Split split = train_test_split(data.rows, SplitSpec{cfg.train_fraction, derive_seed(run_seed, 0)});
        const Dataset train_full = data.subset(split.train);

        // downsample the majority class of the training part, keeping source row ids
        std::vector<std::size_t> local(train_full.rows);
        std::iota(local.begin(), local.end(), std::size_t{0});
        Dataset tagged = train_full;
        tagged.cols += 1;
        tagged.features.clear();
        for (std::size_t i = 0; i < train_full.rows; ++i) {
            const auto row = train_full.row(i);
            tagged.features.insert(tagged.features.end(), row.begin(), row.end());
            tagged.features.push_back(static_cast<double>(i));
        }
        tagged.feature_names.clear();
        const Dataset shifted_tagged = downsample_majority(tagged, cfg.downsample_ratio, derive_seed(run_seed, 1));
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < shifted_tagged.rows; ++i) {
            kept.push_back(static_cast<std::size_t>(shifted_tagged.at(i, tagged.cols - 1)));
        }
        const Dataset shifted_raw = train_full.subset(kept);

        const Standardizer scaler = Standardizer::fit(shifted_raw);
        const Dataset shifted = scaler.apply(shifted_raw);
        const Dataset test = scaler.apply(data.subset(split.test));

        // k-fold cross-validation of p on the shifted training data
        const auto folds = kfold(shifted.rows, cfg.folds, derive_seed(run_seed, 2));
        Json cv = Json::array();
        double best_acc = -1.0;
        double best_p = cfg.p_grid.front();
        for (double p : cfg.p_grid) {
            double acc = 0.0;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                std::vector<std::size_t> fit_rows;
                for (std::size_t g = 0; g < folds.size(); ++g) {
                    if (g != f) fit_rows.insert(fit_rows.end(), folds[g].begin(), folds[g].end());
                }
                std::sort(fit_rows.begin(), fit_rows.end());
                const Dataset fit_part = shifted.subset(fit_rows);
                const Dataset val_part = shifted.subset(folds[f]);
                const PointwiseLossMap map(fit_part, model);
                const OptimResult w = Trainer::superquantile(model, p, cfg.smoothing, cfg.nu).fit(
                    map, fit_part.rows, std::vector<double>(dim, 0.0));
                acc += classification_metrics(val_part, model, w.w_star).accuracy;
            }
            acc /= static_cast<double>(folds.size());
            cv.push_back(Json{{"p", p}, {"accuracy", acc}});
            if (acc > best_acc) {
                best_acc = acc;
                best_p = p;
            }
        }

        const PointwiseLossMap map(shifted, model);
        const OptimResult erm = Trainer::erm(model).fit(map, shifted.rows, std::vector<double>(dim, 0.0));
        const OptimResult sq = Trainer::superquantile(model, best_p, cfg.smoothing, cfg.nu).fit(map, shifted.rows, std::vector<double>(dim, 0.0));
        const auto m_erm = classification_metrics(test, model, erm.w_star);
        const auto m_sq = classification_metrics(test, model, sq.w_star);
        acc_erm.push_back(m_erm.accuracy);
        acc_sq.push_back(m_sq.accuracy);
        prec_erm.push_back(m_erm.precision);
        prec_sq.push_back(m_sq.precision);

        std::size_t minority = 0;
        for (double t : shifted.targets) minority += t > 0.0 ? 1 : 0;
        runs.push_back(Json{{"replicate", r},
                            {"train_rows", train_full.rows},
                            {"shifted_rows", shifted.rows},
                            {"shifted_positive", minority},
                            {"test_rows", test.rows},
                            {"cross_validation", cv},
                            {"selected_p", best_p},
                            {"erm", {{"test", to_json(m_erm)}, {"optimizer", to_json(erm)}}},
                            {"superquantile", {{"test", to_json(m_sq)}, {"optimizer", to_json(sq)}}}});
        add_rows(out.predictions, "test", r, "erm", split.test, test.targets,
                 predict(test, model, erm.w_star));
        add_rows(out.predictions, "test", r, "superquantile", split.test, test.targets,
                 predict(test, model, sq.w_star));
    }

    auto summary = [](const std::vector<double>& acc, const std::vector<double>& prec) {
        return Json{{"accuracy_mean", mean_of(acc)},
                    {"accuracy_std", sample_std(acc)},
                    {"precision_mean", mean_of(prec)},
                    {"precision_std", sample_std(prec)}};
    };
    std::size_t wins = 0;
    for (std::size_t r = 0; r < acc_sq.size(); ++r) wins += acc_sq[r] >= acc_erm[r] ? 1 : 0;

    out.report["experiment"] = "credit";
    out.report["seed"] = cfg.seed;
    out.report["config"] = {{"source", cfg.source},
                            {"rows", data.rows},
                            {"features", data.cols},
                            {"seeds", cfg.seeds},
                            {"folds", cfg.folds},
                            {"p_grid", cfg.p_grid},
                            {"downsample_ratio", cfg.downsample_ratio},
                            {"nu", cfg.nu},
                            {"smoothing", std::string(to_string(cfg.smoothing))},
                            {"reg", cfg.reg},
                            {"train_fraction", cfg.train_fraction}};
    out.report["runs"] = runs;
    out.report["summary"] = {{"erm", summary(acc_erm, prec_erm)},
                             {"superquantile", summary(acc_sq, prec_sq)},
                             {"superquantile_at_least_erm_runs", wins}};
    return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_convergence(const ConvergenceConfig& cfg) {
    const ToyRegConfig toy;
    const ModelSpec model = ModelSpec::parse("poly:2", LossKind::squared);
    const std::vector<double> w(toy.w_bar.begin(), toy.w_bar.end());
    const TailSpec tail(cfg.p);

    auto estimate = [&](std::size_t n, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n = n;
        spec.w_bar = toy.w_bar;
        spec.sigma = toy.sigma;
        spec.mixture = Mixture{toy.alt_fraction, toy.alt_w_bar, std::nullopt};
        spec.seed = seed;
        const SyntheticData d = generate_quadratic(spec);
        return superquantile_integral(EmpiricalSample(losses_at(d.data, model, w)), tail);
    };

    const double reference = estimate(cfg.reference_size, derive_seed(cfg.seed, 0));
    ExperimentOutput out;
    std::ostringstream csv;
    csv << "n,replicate,estimate,gap\n";
    Json rows = Json::array();
    for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
        const std::size_t n = cfg.sizes[k];
        std::vector<double> gaps;
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            const double s = estimate(n, derive_seed(derive_seed(cfg.seed, 1 + k), r));
            gaps.push_back(std::abs(s - reference));
            csv << n << ',' << r << ',' << format_double(s) << ',' << format_double(gaps.back()) << '\n';
        }
        std::vector<double> sorted = gaps;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        rows.push_back(Json{{"n", n}, {"median_gap", median}, {"mean_gap", mean_of(gaps)}});
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        decreasing = decreasing && rows[k]["median_gap"].get<double>() < rows[k - 1]["median_gap"].get<double>();
    }
    out.report["experiment"] = "convergence";
    out.report["seed"] = cfg.seed;
    out.report["config"] = {{"p", cfg.p},
                            {"w", w},
                            {"distribution", "toy quadratic mixture (defaults of toyreg)"},
                            {"reference_size", cfg.reference_size},
                            {"replicates", cfg.replicates}};
    out.report["reference_superquantile"] = reference;
    out.report["table"] = rows;
    out.report["median_gap_strictly_decreasing"] = decreasing;
    out.extra_files.emplace_back("convergence.csv", csv.str());
    return out;
}

// ---------------------------------------------------------------------------

ExperimentOutput run_fit(const Dataset& data, Task task, const FitConfig& cfg) {
    if (task == Task::classification && cfg.model.loss != LossKind::logistic) {
        throw UsageError("classification data needs the logistic loss");
    }
    const Split split = train_test_split(data.rows, SplitSpec{cfg.train_fraction, derive_seed(cfg.seed, 0)});
    Dataset train = data.subset(split.train);
    Dataset test = data.subset(split.test);
    if (cfg.standardize) {
        const Standardizer scaler = Standardizer::fit(train);
        train = scaler.apply(train);
        test = scaler.apply(test);
    }

    const PointwiseLossMap map(train, cfg.model);
    const std::size_t dim = cfg.model.param_dim(train.cols);
    const OptimResult erm = Trainer::erm(cfg.model).fit(map, train.rows, std::vector<double>(dim, 0.0));
    const OptimResult sq = Trainer::superquantile(cfg.model, cfg.p, cfg.smoothing, cfg.nu).fit(map, train.rows, erm.w_star);

    ExperimentOutput out;
    out.task = task;
    Json models = Json::object();
    std::ostringstream weights;
    weights << "model,index,value\n";
    for (const auto& [name, fit] : {std::pair{"erm", &erm}, std::pair{"superquantile", &sq}}) {
        Json entry = model_entry(*fit, cfg.model, fit == &erm ? std::nullopt : std::optional(cfg.p));
        const auto z_train = predict(train, cfg.model, fit->w_star);
        const auto z_test = predict(test, cfg.model, fit->w_star);
        if (task == Task::regression) {
            entry["train"] = to_json(regression_metrics(train.targets, z_train));
            entry["test"] = to_json(regression_metrics(test.targets, z_test));
        } else {
            entry["train"] = to_json(classification_metrics(train, cfg.model, fit->w_star));
            entry["test"] = to_json(classification_metrics(test, cfg.model, fit->w_star));
        }
        models[name] = entry;
        add_rows(out.predictions, "train", 0, name, split.train, train.targets, z_train);
        add_rows(out.predictions, "test", 0, name, split.test, test.targets, z_test);
        for (std::size_t j = 0; j < fit->w_star.size(); ++j) {
            weights << name << ',' << j << ',' << format_double(fit->w_star[j]) << '\n';
        }
    }
    std::string model_name = cfg.model.kind == ModelKind::linear
                                 ? "linear"
                                 : "poly:" + std::to_string(cfg.model.degree);
    out.report["experiment"] = "fit";
    out.report["seed"] = cfg.seed;
    out.report["config"] = {{"task", task == Task::regression ? "regression" : "classification"},
                            {"rows", data.rows},
                            {"features", data.feature_names},
                            {"model", model_name},
                            {"loss", std::string(to_string(cfg.model.loss))},
                            {"reg", cfg.model.reg},
                            {"p", cfg.p},
                            {"nu", cfg.nu},
                            {"smoothing", std::string(to_string(cfg.smoothing))},
                            {"train_fraction", cfg.train_fraction},
                            {"standardized", cfg.standardize}};
    out.report["models"] = models;
    out.extra_files.emplace_back("weights.csv", weights.str());
    return out;
}

// ---------------------------------------------------------------------------

Json run_eval(const std::vector<double>& values, const EvalConfig& cfg) {
    const EmpiricalSample sample(values);
    const TailSpec tail(cfg.p);
    const auto dual = superquantile_dual(sample, tail);
    const auto var = superquantile_variational(sample, tail);
    Json j;
    j["n"] = sample.size();
    j["p"] = cfg.p;
    j["mean"] = mean_of(sample.values());
    j["quantile"] = quantile(sample, tail);
    j["superquantile"] = {{"integral", superquantile_integral(sample, tail)},
                          {"dual", dual.value},
                          {"variational", var.value}};
    j["variational_eta"] = var.eta;
    j["dual_weights"] = dual.weights.q;
    if (cfg.nu) {
        const SmoothingSpec spec(cfg.smoothing, *cfg.nu);
        const auto state = solve_dual_1d(sample, spec, tail);
        const auto& q = state.weights.q;
        const double dmax = max_divergence(cfg.smoothing, sample.size(), tail);
        j["smoothed"] = {
            {"smoothing", std::string(to_string(cfg.smoothing))},
            {"nu", *cfg.nu},
            {"value", state.theta_value},
            {"eta_star", state.eta_star},
            {"max_divergence", dmax},
            {"gap_bound", *cfg.nu * dmax},
            {"weights",
             {{"min", *std::min_element(q.begin(), q.end())},
              {"max", *std::max_element(q.begin(), q.end())},
              {"nonzero", std::count_if(q.begin(), q.end(), [](double x) { return x > 0.0; })},
              {"at_cap", std::count_if(q.begin(), q.end(),
                                       [&](double x) { return x >= tail.cap(sample.size()); })},
              {"divergence", divergence(cfg.smoothing, q)}}}};
    }
    return j;
}

ExperimentOutput run_sweep_nu(const std::vector<double>& losses, const SweepConfig& cfg) {
    const EmpiricalSample sample(losses);
    const TailSpec tail(cfg.p);
    const std::size_t n = sample.size();
    const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
    const double range = *hi > *lo ? *hi - *lo : 1.0;
    std::vector<double> grid = cfg.grid;
    if (grid.empty()) {
        for (int k = -18; k <= 18; ++k) grid.push_back(range * std::pow(10.0, 0.5 * k));
    }
    for (double nu : grid) {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw UsageError("nu grid values must be positive");
    }
    std::sort(grid.begin(), grid.end());

    const double exact = superquantile_integral(sample, tail);
    const double mean = mean_of(sample.values());
    const double dmax = max_divergence(cfg.smoothing, n, tail);
    const double uniform = 1.0 / static_cast<double>(n);

    std::ostringstream table;
    std::ostringstream dump;
    table << "nu,value,superquantile,mean,gap,gap_bound,max_weight,min_weight,uniform_distance\n";
    dump << "nu,index,loss,weight\n";
    bool sandwich = true;
    double small_gap = 0.0;
    double large_rel = 0.0;
    double large_range_rel = 0.0;
    double large_uniform = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double nu = grid[k];
        const DualResult r = smoothed_superquantile(sample, SmoothingSpec(cfg.smoothing, nu), tail);
        const auto& q = r.weights.q;
        double dist = 0.0;
        for (double x : q) dist = std::max(dist, std::abs(x - uniform));
        const double gap = exact - r.value;
        const double slack = 1e-10 * std::max(1.0, std::abs(exact));
        sandwich = sandwich && gap >= -slack && gap <= nu * dmax + slack;
        table << format_double(nu) << ',' << format_double(r.value) << ',' << format_double(exact)
              << ',' << format_double(mean) << ',' << format_double(gap) << ','
              << format_double(nu * dmax) << ','
              << format_double(*std::max_element(q.begin(), q.end())) << ','
              << format_double(*std::min_element(q.begin(), q.end())) << ',' << format_double(dist)
              << '\n';
        for (std::size_t i = 0; i < n; ++i) {
            dump << format_double(nu) << ',' << i << ',' << format_double(losses[i]) << ','
                 << format_double(q[i]) << '\n';
        }
        if (k == 0) small_gap = std::abs(gap);
        if (k + 1 == grid.size()) {
            large_rel = std::abs(r.value - mean) / std::max(std::abs(mean), 1e-300);
            large_range_rel = std::abs(r.value - mean) / range;
            large_uniform = dist;
        }
    }

    ExperimentOutput out;
    out.report["experiment"] = "sweep-nu";
    out.report["config"] = {{"n", n},
                            {"p", cfg.p},
                            {"smoothing", std::string(to_string(cfg.smoothing))},
                            {"range", range},
                            {"grid", grid}};
    out.report["superquantile"] = exact;
    out.report["mean"] = mean;
    out.report["max_divergence"] = dmax;
    const double nu_small = grid.front();
    const double nu_large = grid.back();
    out.report["endpoints"] = {
        {"smallest_nu", nu_small},
        {"smallest_nu_gap", small_gap},
        {"smallest_nu_within_2_nu_dmax", small_gap <= 2.0 * nu_small * dmax + 1e-12 * std::max(1.0, std::abs(exact))},
        {"largest_nu", nu_large},
        {"largest_nu_relative_error_to_mean", large_rel},
        {"largest_nu_within_1e-6_of_mean", large_rel <= 1e-6},
        {"largest_nu_error_relative_to_range", large_range_rel},
        {"largest_nu_weights_uniform_distance", large_uniform},
        {"largest_nu_weights_within_1e-6_of_uniform", large_uniform <= 1e-6}};
    out.report["sandwich_holds"] = sandwich;
    out.extra_files.emplace_back("sweep.csv", table.str());
    out.extra_files.emplace_back("weights.csv", dump.str());
    return out;
}

} // namespace squant::experiments
