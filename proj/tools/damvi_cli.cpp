// damvi command-line tool: train, evaluate, compare, sweep.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "damvi/damvi.hpp"
#include "damvi/dataset.hpp"
#include "damvi/experiment.hpp"
#include "damvi/io.hpp"
#include "damvi/metrics.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

constexpr int kCsvSchemaVersion = 1;

struct DataOptions {
    std::string path;
    std::string label_column = "label";
    std::string positive_label = "1";
    std::string synthetic;

    void add(CLI::App& cmd) {
        cmd.add_option("--data", path, "CSV dataset with a header row");
        cmd.add_option("--label-column", label_column, "Name of the label column")->capture_default_str();
        cmd.add_option("--positive-label", positive_label, "Raw label value of the positive class")
            ->capture_default_str();
        cmd.add_option("--synthetic", synthetic,
                       "Synthetic dataset instead of --data, e.g. n=5000,d=10,ir=0.02,sep=2.0,seed=0");
    }

    damvi::Dataset load() const {
        if (path.empty() == synthetic.empty())
            throw damvi::Error(damvi::Errc::invalid_argument, "exactly one of --data or --synthetic is required");
        if (!path.empty()) return damvi::load_csv(path, label_column, positive_label);

        std::map<std::string, std::string> kv{{"n", "5000"}, {"d", "10"}, {"ir", "0.02"}, {"sep", "2.0"}, {"seed", "0"}};
        std::stringstream ss(synthetic);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || !kv.count(item.substr(0, eq)))
                throw damvi::Error(damvi::Errc::invalid_argument, "bad --synthetic entry '" + item + "'");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
        try {
            return damvi::make_synthetic(std::stoull(kv["n"]), std::stoull(kv["d"]), std::stod(kv["ir"]),
                                         std::stod(kv["sep"]), std::stoull(kv["seed"]));
        } catch (const std::logic_error&) {
            throw damvi::Error(damvi::Errc::invalid_argument, "non-numeric value in --synthetic");
        }
    }
};

struct ModelOptions {
    std::size_t k = damvi::kDefaultClassifiers;
    double bootstrap_fraction = damvi::kDefaultBootstrapFraction;
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t restarts = 4;
    double tol = 1e-10;
    std::size_t max_iter = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 0;

    void add(CLI::App& cmd) {
        cmd.add_option("--k", k, "Number of base classifiers")->capture_default_str();
        cmd.add_option("--bootstrap-fraction", bootstrap_fraction, "Bootstrap size as a fraction of n")
            ->capture_default_str();
        cmd.add_option("--max-depth", max_depth, "Tree depth limit, 0 for unlimited")->capture_default_str();
        cmd.add_option("--min-samples-split", min_samples_split)->capture_default_str();
        cmd.add_option("--min-samples-leaf", min_samples_leaf)->capture_default_str();
        cmd.add_option("--restarts", restarts, "Random optimizer restarts besides the uniform start")
            ->capture_default_str();
        cmd.add_option("--tol", tol, "Optimizer convergence tolerance")->capture_default_str();
        cmd.add_option("--max-iter", max_iter, "Optimizer iterations per start")->capture_default_str();
        cmd.add_option("--seed", seed, "Base random seed")->capture_default_str();
        cmd.add_option("--threads", threads, "Tree-training threads, 0 = all cores")->capture_default_str();
    }

    damvi::DamviConfig config() const {
        damvi::DamviConfig c;
        c.classifiers = k;
        c.bootstrap_fraction = bootstrap_fraction;
        if (max_depth > 0) c.tree.max_depth = max_depth;
        c.tree.min_samples_split = min_samples_split;
        c.tree.min_samples_leaf = min_samples_leaf;
        c.optimizer.restarts = restarts;
        c.optimizer.tol = tol;
        c.optimizer.max_iter = max_iter;
        c.seed = seed;
        c.threads = threads;
        return c;
    }
};

struct ExperimentOptions {
    std::size_t reps = 5;
    double test_fraction = 0.3;
    std::vector<std::string> methods{"damvi", "uniform-bagging", "ros-bagging", "smote-bagging", "balanced-bagging"};

    void add(CLI::App& cmd) {
        cmd.add_option("--reps", reps, "Repetitions (fresh stratified split each)")->capture_default_str();
        cmd.add_option("--test-fraction", test_fraction, "Held-out fraction per class")->capture_default_str();
        cmd.add_option("--methods", methods, "Methods to run")->delimiter(',')->capture_default_str();
    }

    damvi::ExperimentConfig config(const ModelOptions& model) const {
        damvi::ExperimentConfig c;
        c.repetitions = reps;
        c.test_fraction = test_fraction;
        c.methods.clear();
        for (const auto& m : methods) c.methods.push_back(damvi::parse_method(m));
        c.damvi = model.config();
        c.base_seed = model.seed;
        c.validate();
        return c;
    }
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw damvi::Error(damvi::Errc::missing_file, "cannot create output directory '" + dir + "'");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw damvi::Error(damvi::Errc::missing_file, "cannot write '" + path.string() + "'");
    return out;
}

void write_manifest(const fs::path& dir, const damvi::Json& files) {
    damvi::write_json_file({{"format_version", kCsvSchemaVersion}, {"files", files}}, (dir / "manifest.json").string());
}

int cmd_train(const DataOptions& data, const ModelOptions& model, const std::string& out_dir,
              const std::string& trace_path) {
    const auto ds = data.load();
    auto config = model.config();
    std::vector<damvi::TraceRow> trace;
    if (!trace_path.empty()) config.optimizer.trace = &trace;
    const auto trained = damvi::train_damvi(ds, config);

    ensure_dir(out_dir);
    damvi::save_ensemble(trained.ensemble, (fs::path(out_dir) / "model.json").string());
    damvi::write_json_file(damvi::report_to_json(trained.report), (fs::path(out_dir) / "report.json").string());
    if (!trace_path.empty()) {
        auto out = open_out(trace_path);
        out << "start,iteration,objective,step\n" << std::setprecision(17);
        for (const auto& t : trace) out << t.start << ',' << t.iteration << ',' << t.objective << ',' << t.step << '\n';
    }
    std::cout << damvi::report_to_json(trained.report).dump(2) << '\n';
    return trained.report.optimizer_status == damvi::OptimizerStatus::degenerate ? kExitNumerical : kExitOk;
}

int cmd_evaluate(const DataOptions& data, const std::string& model_path, const std::string& out_path,
                 const std::string& pr_path) {
    const auto ensemble = damvi::load_ensemble(model_path);
    const auto ds = data.load();
    const auto m = damvi::evaluate(ensemble, ds);
    const damvi::Json result{{"format_version", kCsvSchemaVersion},
                             {"f1", m.f1},
                             {"average_precision", m.average_precision},
                             {"n", m.n},
                             {"positive_count", m.positive_count}};
    if (!out_path.empty()) damvi::write_json_file(result, out_path);
    if (!pr_path.empty()) {
        auto out = open_out(pr_path);
        damvi::write_pr_curve_csv(damvi::pr_curve({damvi::ensemble_scores(ensemble, ds), ds.labels()}), out);
    }
    std::cout << result.dump(2) << '\n';
    return kExitOk;
}

int cmd_compare(const DataOptions& data, const ModelOptions& model, const ExperimentOptions& exp,
                const std::string& out_dir) {
    const auto cfg = exp.config(model);
    if (cfg.methods.size() < 2) throw damvi::Error(damvi::Errc::invalid_argument, "compare needs at least two methods");
    const auto ds = data.load();
    const auto runs = damvi::run_repetitions(ds, cfg);
    const auto summary = damvi::summarize(runs, cfg.methods);

    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    {
        auto out = open_out(dir / "results.csv");
        damvi::write_summary_csv(summary, out);
    }
    {
        auto out = open_out(dir / "runs.csv");
        damvi::write_runs_csv(runs, out);
    }
    write_manifest(dir, {{"results.csv", "method,f1_mean,f1_std,ap_mean,ap_std,p_f1,p_ap"},
                         {"runs.csv", "method,repetition,f1,ap"}});
    damvi::write_summary_csv(summary, std::cout);
    return kExitOk;
}

int cmd_sweep(const DataOptions& data, const ModelOptions& model, const ExperimentOptions& exp,
              const std::vector<double>& grid, const std::string& out_dir) {
    const auto cfg = exp.config(model);
    const auto ds = data.load();
    const auto records = damvi::run_sweep(ds, cfg, grid);

    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    {
        auto out = open_out(dir / "sweep.csv");
        damvi::write_sweep_csv(records, out);
    }
    write_manifest(dir, {{"sweep.csv", "ir,method,repetition,f1,ap"}});
    std::cout << "wrote " << records.size() << " rows to " << (dir / "sweep.csv").string() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diversity-aware majority vote for imbalanced binary classification"};
    app.require_subcommand(1);

    DataOptions data;
    ModelOptions model;
    ExperimentOptions exp;
    std::string out_dir = ".";
    std::string trace_path, model_path, eval_out, pr_path;
    std::vector<double> grid{0.005, 0.01, 0.02, 0.04, 0.08};

    auto* train = app.add_subcommand("train", "Train a model and write model.json and report.json");
    data.add(*train);
    model.add(*train);
    train->add_option("--out", out_dir, "Output directory")->capture_default_str();
    train->add_option("--trace", trace_path, "Write the optimizer trace CSV here");

    auto* evaluate = app.add_subcommand("evaluate", "Score a saved model on a dataset");
    data.add(*evaluate);
    evaluate->add_option("--model", model_path, "model.json from train")->required();
    evaluate->add_option("--out", eval_out, "Also write the metrics JSON here");
    evaluate->add_option("--pr-curve", pr_path, "Write the precision-recall curve CSV here");

    auto* compare = app.add_subcommand("compare", "Compare methods over repeated stratified splits");
    data.add(*compare);
    model.add(*compare);
    exp.add(*compare);
    compare->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Compare methods across imbalance ratios");
    data.add(*sweep);
    model.add(*sweep);
    exp.add(*sweep);
    sweep->add_option("--ir-grid", grid, "Target imbalance ratios")->delimiter(',')->capture_default_str();
    sweep->add_option("--out", out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(data, model, out_dir, trace_path);
        if (*evaluate) return cmd_evaluate(data, model_path, eval_out, pr_path);
        if (*compare) return cmd_compare(data, model, exp, out_dir);
        if (*sweep) return cmd_sweep(data, model, exp, grid, out_dir);
    } catch (const damvi::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.category()) {
        case damvi::ErrorCategory::usage: return kExitUsage;
        case damvi::ErrorCategory::data: return kExitData;
        case damvi::ErrorCategory::numerical: return kExitNumerical;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
