#include <chrono>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <map>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "squant/rng.hpp"

namespace ex = squant::experiments;
using squant::SmoothingKind;
using squant::Task;

namespace {

constexpr int kUsageExit = 2;

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        const auto first = token.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto last = token.find_last_not_of(" \t\r\n");
        token = token.substr(first, last - first + 1);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw ex::UsageError(what + ": not a number: " + token);
        }
    }
    return out;
}

// Numbers separated by commas or whitespace; a non-numeric first token is
// taken as a header and skipped.
std::vector<double> read_values_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ex::UsageError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    for (char& c : text) {
        if (c == '\n' || c == '\r' || c == '\t' || c == ' ' || c == ';') c = ',';
    }
    std::istringstream in(text);
    std::vector<double> out;
    std::string token;
    bool first = true;
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        try {
            std::size_t used = 0;
            const double v = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            out.push_back(v);
        } catch (const std::exception&) {
            if (!first) throw ex::UsageError(path + ": not a number: " + token);
        }
        first = false;
    }
    return out;
}

std::string data_path(const std::string& given, const char* file) {
    if (!given.empty()) return given;
    if (const char* dir = std::getenv("SQUANT_DATA_DIR")) {
        return (std::filesystem::path(dir) / file).string();
    }
    return {};
}

squant::Dataset load_dataset(const std::string& path, Task task,
                             const std::vector<std::string>& categorical) {
    if (path.empty()) throw ex::UsageError("no dataset path given (use --data or SQUANT_DATA_DIR)");
    if (!std::filesystem::exists(path)) throw ex::UsageError("dataset not found: " + path);
    return squant::load_csv(path, squant::CsvSchema{task, categorical});
}

void check_p(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw ex::UsageError("--p must lie in [0, 1)");
}

void check_nu(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ex::UsageError("--nu must be positive");
}

SmoothingKind smoothing_from(const std::string& name) {
    return squant::parse_smoothing_kind(name);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void finish(ex::ExperimentOutput& out, const std::string& dir, bool record_time, const Timer& t) {
    if (record_time) out.report["wall_time_seconds"] = t.seconds();
    ex::write_outputs(dir, out);
    std::cout << "wrote " << (std::filesystem::path(dir) / "report.json").string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superquantile (CVaR) learning toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "squant 0.1.0");

    // eval
    auto* eval = app.add_subcommand("eval", "Quantile, superquantile and smoothed superquantile of a sample");
    std::string eval_values, eval_input;
    double eval_p = 0.0;
    std::optional<double> eval_nu;
    std::string eval_smoothing = "euclidean";
    auto* values_opt = eval->add_option("--values", eval_values, "Comma-separated values");
    eval->add_option("--input", eval_input, "File of values (comma or newline separated)")
        ->excludes(values_opt);
    eval->add_option("--p", eval_p, "Tail level in [0, 1)")->required();
    eval->add_option("--nu", eval_nu, "Smoothing parameter");
    eval->add_option("--smoothing", eval_smoothing, "euclidean or kl")
        ->check(CLI::IsMember({"euclidean", "kl"}));

    // fit
    auto* fit = app.add_subcommand("fit", "Train ERM and smoothed superquantile models on a CSV file");
    std::string fit_data, fit_loss = "squared", fit_model = "linear", fit_out = "squant-fit";
    std::vector<std::string> fit_categorical;
    ex::FitConfig fit_cfg;
    double fit_reg = 0.0;
    bool fit_time = false;
    std::string fit_smoothing = "euclidean";
    fit->add_option("--data", fit_data, "CSV file, label in the last column");
    fit->add_option("--loss", fit_loss, "squared or logistic")
        ->check(CLI::IsMember({"squared", "least-squares", "logistic"}));
    fit->add_option("--model", fit_model, "linear or poly:D");
    fit->add_option("--p", fit_cfg.p, "Tail level in [0, 1)");
    fit->add_option("--nu", fit_cfg.nu, "Smoothing parameter");
    fit->add_option("--smoothing", fit_smoothing, "euclidean or kl")
        ->check(CLI::IsMember({"euclidean", "kl"}));
    fit->add_option("--reg", fit_reg, "Ridge strength");
    fit->add_option("--seed", fit_cfg.seed, "Split seed");
    fit->add_option("--split", fit_cfg.train_fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
    fit->add_flag("--standardize", fit_cfg.standardize, "Standardize features on the training part");
    fit->add_option("--categorical", fit_categorical, "Columns to one-hot encode")->delimiter(',');
    fit->add_option("--out", fit_out, "Output directory");
    fit->add_flag("--record-time", fit_time, "Add wall time to the report");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a predefined study");
    std::string exp_name, exp_out, exp_data;
    std::uint64_t exp_seed = 0;
    bool exp_time = false, exp_synthetic = false;
    std::optional<double> exp_p, exp_nu;
    std::string exp_smoothing = "euclidean";
    std::optional<std::size_t> exp_replicates, exp_seeds;
    exp->add_option("name", exp_name, "toyreg, federated, fairness, abalone, credit or convergence")
        ->required()
        ->check(CLI::IsMember({"toyreg", "federated", "fairness", "abalone", "credit", "convergence"}));
    exp->add_option("--seed", exp_seed, "Base seed");
    exp->add_option("--out", exp_out, "Output directory (default: squant-<name>)");
    exp->add_option("--data", exp_data, "Dataset CSV for abalone / credit");
    exp->add_flag("--synthetic", exp_synthetic, "credit: use the built-in credit-like generator");
    exp->add_option("--p", exp_p, "Tail level (toyreg, federated, fairness, abalone, convergence)");
    exp->add_option("--nu", exp_nu, "Smoothing parameter");
    exp->add_option("--smoothing", exp_smoothing, "euclidean or kl")
        ->check(CLI::IsMember({"euclidean", "kl"}));
    exp->add_option("--replicates", exp_replicates, "convergence: replicates per size");
    exp->add_option("--seeds", exp_seeds, "credit: number of seeds");
    exp->add_flag("--record-time", exp_time, "Add wall time to the report");

    // sweep-nu
    auto* sweep = app.add_subcommand("sweep-nu", "Smoothed superquantile across a grid of nu");
    std::string sw_values, sw_input, sw_data, sw_w, sw_grid, sw_out = "squant-sweep";
    std::string sw_model = "linear", sw_loss = "squared";
    std::optional<std::size_t> sw_gaussian;
    bool sw_fit_first = false, sw_time = false;
    std::uint64_t sw_seed = 0;
    ex::SweepConfig sw_cfg;
    std::string sw_smoothing = "euclidean";
    sweep->add_option("--values", sw_values, "Comma-separated loss values");
    sweep->add_option("--input", sw_input, "File of loss values");
    sweep->add_option("--gaussian", sw_gaussian, "Use N standard Gaussian draws as losses");
    sweep->add_option("--data", sw_data, "CSV dataset; losses are taken at --w or a fitted ERM model");
    sweep->add_option("--w", sw_w, "File with the fixed parameter vector");
    sweep->add_flag("--fit-first", sw_fit_first, "Fit an ERM model on --data first");
    sweep->add_option("--model", sw_model, "linear or poly:D (with --data)");
    sweep->add_option("--loss", sw_loss, "squared or logistic (with --data)")
        ->check(CLI::IsMember({"squared", "least-squares", "logistic"}));
    sweep->add_option("--p", sw_cfg.p, "Tail level in [0, 1)");
    sweep->add_option("--smoothing", sw_smoothing, "euclidean or kl")
        ->check(CLI::IsMember({"euclidean", "kl"}));
    sweep->add_option("--grid", sw_grid, "Comma-separated nu values (default: log grid over the loss range)");
    sweep->add_option("--seed", sw_seed, "Seed for --gaussian");
    sweep->add_option("--out", sw_out, "Output directory");
    sweep->add_flag("--record-time", sw_time, "Add wall time to the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageExit;
    }

    const Timer timer;
    try {
        if (*eval) {
            check_p(eval_p);
            if (eval_nu) check_nu(*eval_nu);
            std::vector<double> values;
            if (!eval_values.empty()) {
                values = parse_number_list(eval_values, "--values");
            } else if (!eval_input.empty()) {
                values = read_values_file(eval_input);
            } else {
                throw ex::UsageError("eval needs --values or --input");
            }
            if (values.empty()) throw ex::UsageError("no values given");
            std::cout << ex::run_eval(values, ex::EvalConfig{eval_p, eval_nu, smoothing_from(eval_smoothing)}).dump(2)
                      << '\n';
        } else if (*fit) {
            check_p(fit_cfg.p);
            check_nu(fit_cfg.nu);
            fit_cfg.smoothing = smoothing_from(fit_smoothing);
            const squant::LossKind loss = squant::parse_loss_kind(fit_loss);
            fit_cfg.model = squant::ModelSpec::parse(fit_model, loss, fit_reg);
            const Task task = loss == squant::LossKind::logistic ? Task::classification : Task::regression;
            const squant::Dataset data = load_dataset(fit_data, task, fit_categorical);
            ex::ExperimentOutput out = ex::run_fit(data, task, fit_cfg);
            finish(out, fit_out, fit_time, timer);
        } else if (*exp) {
            if (exp_p) check_p(*exp_p);
            if (exp_nu) check_nu(*exp_nu);
            if (exp_out.empty()) exp_out = "squant-" + exp_name;
            ex::ExperimentOutput out;
            if (exp_name == "toyreg") {
                ex::ToyRegConfig cfg;
                cfg.seed = exp_seed;
                cfg.p = exp_p.value_or(cfg.p);
                cfg.nu = exp_nu.value_or(cfg.nu);
                cfg.smoothing = smoothing_from(exp_smoothing);
                out = ex::run_toyreg(cfg);
            } else if (exp_name == "federated" || exp_name == "fairness") {
                ex::FederatedConfig cfg;
                cfg.seed = exp_seed;
                cfg.p = exp_p.value_or(cfg.p);
                cfg.nu = exp_nu.value_or(cfg.nu);
                cfg.smoothing = smoothing_from(exp_smoothing);
                out = exp_name == "federated" ? ex::run_federated(cfg) : ex::run_fairness(cfg);
            } else if (exp_name == "abalone") {
                ex::AbaloneConfig cfg;
                cfg.seed = exp_seed;
                cfg.p = exp_p.value_or(cfg.p);
                cfg.nu = exp_nu.value_or(cfg.nu);
                cfg.smoothing = smoothing_from(exp_smoothing);
                const auto data = load_dataset(data_path(exp_data, "abalone.csv"), Task::regression, {"Sex"});
                out = ex::run_abalone(data, cfg);
            } else if (exp_name == "credit") {
                ex::CreditConfig cfg;
                cfg.seed = exp_seed;
                cfg.nu = exp_nu.value_or(cfg.nu);
                cfg.smoothing = smoothing_from(exp_smoothing);
                if (exp_seeds) cfg.seeds = *exp_seeds;
                if (exp_p) throw ex::UsageError("credit tunes p by cross-validation; --p is not accepted");
                squant::Dataset data;
                if (exp_synthetic) {
                    if (!exp_data.empty()) throw ex::UsageError("--synthetic and --data are exclusive");
                    data = squant::generate_credit_like(squant::CreditSpec{.seed = exp_seed});
                    cfg.source = "synthetic";
                } else {
                    data = load_dataset(data_path(exp_data, "australian.csv"), Task::classification, {});
                }
                out = ex::run_credit(data, cfg);
            } else {
                ex::ConvergenceConfig cfg;
                cfg.seed = exp_seed;
                cfg.p = exp_p.value_or(cfg.p);
                if (exp_replicates) cfg.replicates = *exp_replicates;
                out = ex::run_convergence(cfg);
            }
            finish(out, exp_out, exp_time, timer);
        } else if (*sweep) {
            check_p(sw_cfg.p);
            sw_cfg.smoothing = smoothing_from(sw_smoothing);
            const int sources = !sw_values.empty() + !sw_input.empty() + sw_gaussian.has_value() +
                                !sw_data.empty();
            if (sources != 1) {
                throw ex::UsageError("sweep-nu needs exactly one of --values, --input, --gaussian, --data");
            }
            if (!sw_grid.empty()) sw_cfg.grid = parse_number_list(sw_grid, "--grid");
            std::vector<double> losses;
            std::optional<std::vector<double>> w_used;
            if (!sw_values.empty()) {
                losses = parse_number_list(sw_values, "--values");
            } else if (!sw_input.empty()) {
                losses = read_values_file(sw_input);
            } else if (sw_gaussian) {
                if (*sw_gaussian == 0) throw ex::UsageError("--gaussian needs N >= 1");
                squant::Rng rng(sw_seed);
                for (std::size_t i = 0; i < *sw_gaussian; ++i) losses.push_back(rng.normal());
            } else {
                if (sw_fit_first == !sw_w.empty()) {
                    throw ex::UsageError("--data needs exactly one of --w and --fit-first");
                }
                const squant::LossKind loss = squant::parse_loss_kind(sw_loss);
                const auto model = squant::ModelSpec::parse(sw_model, loss);
                const Task task = loss == squant::LossKind::logistic ? Task::classification : Task::regression;
                const squant::Dataset data = load_dataset(sw_data, task, {});
                std::vector<double> w;
                if (sw_fit_first) {
                    const squant::PointwiseLossMap map(data, model);
                    w = ex::Trainer::erm(model)
                            .fit(map, data.rows, std::vector<double>(model.param_dim(data.cols), 0.0))
                            .w_star;
                } else {
                    w = read_values_file(sw_w);
                    if (w.size() != model.param_dim(data.cols)) {
                        throw ex::UsageError("--w has " + std::to_string(w.size()) + " entries, model needs " +
                                             std::to_string(model.param_dim(data.cols)));
                    }
                }
                losses = ex::losses_at(data, model, w);
                w_used = w;
            }
            if (losses.empty()) throw ex::UsageError("no loss values");
            ex::ExperimentOutput out = ex::run_sweep_nu(losses, sw_cfg);
            if (w_used) out.report["w"] = *w_used;
            finish(out, sw_out, sw_time, timer);
        }
    } catch (const squant::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
