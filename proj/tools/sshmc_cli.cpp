// Command line interface: dataset tooling, training, prediction, the
// labeled/unlabeled benchmark protocol, and statistical reporting.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sshmc/baselines.hpp"
#include "sshmc/benchmark.hpp"
#include "sshmc/bundle.hpp"
#include "sshmc/dataset.hpp"
#include "sshmc/errors.hpp"
#include "sshmc/evaluation.hpp"
#include "sshmc/lcn.hpp"
#include "sshmc/rng.hpp"
#include "sshmc/ssl.hpp"

namespace fs = std::filesystem;
using namespace sshmc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct ForestFlags {
    int n_trees = 100;
    std::string max_features = "sqrt";
    int min_samples_split = 2;
    int max_depth = -1;
    std::uint64_t seed = 0;

    RandomForestConfig config() const {
        RandomForestConfig c;
        c.n_trees = n_trees;
        c.max_features = max_features_from_string(max_features);
        c.min_samples_split = min_samples_split;
        c.max_depth = max_depth;
        c.seed = seed;
        return c;
    }
    void attach(CLI::App* app) {
        app->add_option("--trees", n_trees, "Trees per node classifier")->capture_default_str();
        app->add_option("--max-features", max_features, "Per-split feature rule: sqrt|log2|all")
            ->capture_default_str();
        app->add_option("--min-samples-split", min_samples_split, "Minimum node size to split")
            ->capture_default_str();
        app->add_option("--max-depth", max_depth, "Tree depth cap (-1 = unlimited)")
            ->capture_default_str();
        app->add_option("--seed", seed, "Root seed for all randomness")->capture_default_str();
    }
};

bool is_arff(const std::string& path) {
    return path.size() > 5 && path.substr(path.size() - 5) == ".arff";
}

Dataset load_dataset_args(const std::string& features, const std::string& labels,
                          const std::string& hierarchy,
                          std::shared_ptr<const Hierarchy> shared = nullptr) {
    if (is_arff(features)) return load_clus_arff(features);
    if (shared) return load_native(features, labels, shared);
    return load_native(features, labels, hierarchy);
}

// Feature CSV without a labels counterpart (header row, `?` = missing).
Matrix load_features_only(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open features file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty features file");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty() || tok == "?") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                try {
                    row.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ParseError(path + ":" + std::to_string(lineno) +
                                     ": bad numeric value '" + tok + "'");
                }
            }
        }
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) {
            throw ParseError(path + ": ragged row " + std::to_string(r + 2));
        }
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

void write_predictions_csv(const fs::path& path, const Hierarchy& h, const Matrix& pred) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write predictions: " + path.string());
    for (std::size_t l = 0; l < h.size(); ++l) {
        if (l) out << ',';
        out << h.name(static_cast<NodeId>(l));
    }
    out << '\n';
    char buf[40];
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t l = 0; l < pred.cols(); ++l) {
            if (l) out << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", pred(r, l));
            out << buf;
        }
        out << '\n';
    }
}

int cmd_train(const std::string& method, const std::string& features, const std::string& labels,
              const std::string& hierarchy, const std::string& unlabeled_features,
              const std::string& out_dir, const std::string& policy_name,
              const ForestFlags& forest, const SshmcConfig& ssl_flags, double confidence,
              int max_rounds) {
    const auto started = std::chrono::steady_clock::now();
    Dataset labeled = load_dataset_args(features, labels, hierarchy);

    Matrix unlabeled;
    if (!unlabeled_features.empty()) {
        unlabeled = is_arff(unlabeled_features) ? load_clus_arff(unlabeled_features).features
                                                : load_features_only(unlabeled_features);
    }

    // Distances and trees want complete features.
    const ImputeResult imputed = impute_missing(labeled.features, {unlabeled});
    labeled.features = imputed.train;
    unlabeled = imputed.others[0];

    const Policy policy = policy_from_string(policy_name);
    const RandomForestConfig base = forest.config();
    Manifest extra;
    extra["features_path"] = features;
    extra["t2label"] = std::to_string(ssl_flags.t2label);

    if (method == "lcn") {
        const LcnModel model = fit_lcn(labeled, policy, base);
        const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
        extra["seconds"] = std::to_string(seconds.count());
        save_bundle(out_dir, model, method, extra);
    } else if (method == "stml" || method == "sthc") {
        SelfTrainConfig config;
        config.confidence = confidence;
        config.max_rounds = max_rounds;
        config.base = base;
        const SelfTrainModel model = method == "stml" ? fit_stml(labeled, unlabeled, config)
                                                      : fit_sthc(labeled, unlabeled, config);
        const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
        extra["seconds"] = std::to_string(seconds.count());
        save_bundle(out_dir, model, method, extra);
    } else if (method.rfind("sshmc-", 0) == 0) {
        SshmcConfig config = ssl_flags;
        config.variant = variant_from_string(method.substr(6));
        config.seed = base.seed;
        const SshmcResult result = run_sshmc_bli(labeled, unlabeled, config, policy, base);
        const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
        extra["seconds"] = std::to_string(seconds.count());
        extra["k"] = std::to_string(config.k);
        extra["thr"] = std::to_string(config.thr);
        extra["variant"] = to_string(config.variant);
        extra["max_iterations"] = std::to_string(config.max_iterations);
        extra["k_step_iters"] = std::to_string(config.k_step_iters);
        extra["sisi_n"] = std::to_string(config.sisi_n);
        extra["iterations_run"] = std::to_string(result.log.size());
        save_bundle(out_dir, result.model, method, extra);
        std::ofstream log_out(fs::path(out_dir) / "iterations.csv");
        write_iteration_log_csv(log_out, result.log);
    } else {
        throw CLI::ValidationError("--method", "unknown method '" + method + "'");
    }
    std::cout << "trained " << method << " -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_dir, const std::string& features_path,
                const std::string& out_path, bool raw) {
    const ModelBundle bundle = load_bundle(model_dir);
    const Matrix features = load_features_only(features_path);
    const Matrix pred = raw ? bundle.predict_raw(features) : bundle.predict(features);
    write_predictions_csv(out_path, *bundle.hierarchy, pred);
    std::cout << "predicted " << pred.rows() << " rows -> " << out_path << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& model_dir, const std::string& features_path,
                 const std::string& labels_path, const std::string& out_path, double threshold) {
    const ModelBundle bundle = load_bundle(model_dir);
    const Dataset test = load_native(features_path, labels_path, bundle.hierarchy);
    if (test.rows() == 0) throw Error("evaluate: empty test set");
    const ImputeResult imputed = impute_missing(test.features, {});
    const Matrix pred = bundle.predict(imputed.train);
    const double ap = average_precision(pred, test.labels);
    const MicroPR pr = micro_pr_at_threshold(pred, test.labels, threshold);
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write metrics: " + out_path);
    out << "metric,value\n";
    out << "ap," << ap << "\n";
    out << "micro_precision@" << threshold << "," << pr.precision << "\n";
    out << "micro_recall@" << threshold << "," << pr.recall << "\n";
    std::cout << "ap=" << ap << " micro_p=" << pr.precision << " micro_r=" << pr.recall << "\n";
    return kExitOk;
}

int cmd_synth(std::uint64_t seed, const std::string& out_dir, int with_validation) {
    const ArtificialData data = generate_artificial(seed);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    data.labeled.hierarchy->save(dir / "hierarchy.txt");
    save_native(data.labeled, dir / "labeled.features.csv", dir / "labeled.labels.txt");
    save_native(data.unlabeled, dir / "unlabeled.features.csv", dir / "unlabeled.labels.txt");
    save_native(data.test, dir / "test.features.csv", dir / "test.labels.txt");

    if (with_validation > 0) {
        // Benchmark layout: train = labeled + unlabeled rows, plus a fresh
        // validation draw, so the directory satisfies the protocol inputs.
        Dataset train;
        train.hierarchy = data.labeled.hierarchy;
        train.features = Matrix(data.labeled.rows() + data.unlabeled.rows(), 2);
        for (std::size_t r = 0; r < data.labeled.rows(); ++r) {
            train.features(r, 0) = data.labeled.features(r, 0);
            train.features(r, 1) = data.labeled.features(r, 1);
            train.labels.push_back(data.labeled.labels[r]);
        }
        for (std::size_t r = 0; r < data.unlabeled.rows(); ++r) {
            train.features(data.labeled.rows() + r, 0) = data.unlabeled.features(r, 0);
            train.features(data.labeled.rows() + r, 1) = data.unlabeled.features(r, 1);
            train.labels.push_back(data.unlabeled.labels[r]);
        }
        save_native(train, dir / "train.features.csv", dir / "train.labels.txt");
        const ArtificialData valid_draw = generate_artificial(Rng::derive(seed, "validation"));
        Dataset valid = valid_draw.test;
        std::vector<std::size_t> ids;
        for (std::size_t r = 0; r < std::min<std::size_t>(valid.rows(),
                                                          static_cast<std::size_t>(with_validation));
             ++r) {
            ids.push_back(r);
        }
        valid = select_rows(valid, ids);
        save_native(valid, dir / "valid.features.csv", dir / "valid.labels.txt");
    }
    std::cout << "synthesized labeled=12 unlabeled=330 test=300 -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_benchmark(const std::vector<std::string>& data_dirs, const BenchmarkOptions& options,
                  const std::string& out_dir) {
    std::vector<BenchmarkDataset> datasets;
    for (const auto& dir : data_dirs) {
        datasets.push_back(load_benchmark_dataset(dir, fs::path(dir).filename().string()));
    }
    fs::create_directories(out_dir);
    const fs::path manifest_dir = fs::path(out_dir) / "manifests";
    const BenchmarkReport report = run_benchmark(datasets, options, &manifest_dir);

    {
        std::ofstream out(fs::path(out_dir) / "results.csv");
        write_results_csv(out, report.rows);
    }
    {
        std::ofstream out(fs::path(out_dir) / "results_averaged.csv");
        write_results_csv(out, report.averaged);
    }
    if (report.comparison) {
        std::ofstream ranks(fs::path(out_dir) / "ranks.csv");
        write_rank_csv(ranks, *report.comparison);
        std::ofstream text(fs::path(out_dir) / "report.txt");
        write_report_text(text, *report.comparison);
        write_report_text(std::cout, *report.comparison);
    }
    std::size_t failed = 0;
    for (const auto& row : report.rows) failed += row.failed ? 1 : 0;
    std::cout << "benchmark: " << report.rows.size() << " runs, " << failed << " failed -> "
              << out_dir << "\n";
    return kExitOk;
}

int cmd_stats(const std::string& results_path, const std::string& out_dir, double alpha) {
    std::ifstream in(results_path);
    if (!in) throw ParseError("cannot open results csv: " + results_path);
    const auto rows = read_results_csv(in);
    const auto comparison = compare_from_rows(rows, alpha);
    if (!comparison) {
        throw DegenerateError("stats: need at least 2 methods over 2 complete blocks");
    }
    fs::create_directories(out_dir);
    {
        std::ofstream ranks(fs::path(out_dir) / "ranks.csv");
        write_rank_csv(ranks, *comparison);
    }
    {
        std::ofstream text(fs::path(out_dir) / "report.txt");
        write_report_text(text, *comparison);
    }
    write_report_text(std::cout, *comparison);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised hierarchical multi-label classification toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file; flags override it");

    ForestFlags forest;
    SshmcConfig ssl_flags;
    double confidence = 0.75;
    int max_rounds = 5;
    std::string policy_name = "balanced_bottom_up";

    // train
    auto* train = app.add_subcommand("train", "Train a model and write a bundle directory");
    std::string method, features, labels, hierarchy, unlabeled_features, out_dir;
    train->add_option("--method", method,
                      "lcn | sshmc-v1 | sshmc-v2 | sshmc-v3 | stml | sthc")
        ->required();
    train->add_option("--features", features, "features.csv or .arff")->required();
    train->add_option("--labels", labels, "labels.txt (unused for .arff)");
    train->add_option("--hierarchy", hierarchy, "hierarchy file (unused for .arff)");
    train->add_option("--unlabeled-features", unlabeled_features,
                      "features.csv of the unlabeled pool");
    train->add_option("--out", out_dir, "bundle output directory")->required();
    train->add_option("--policy", policy_name,
                      "less_inclusive | inclusive | siblings | exclusive | balanced_bottom_up")
        ->capture_default_str();
    train->add_option("--k", ssl_flags.k, "nearest labeled neighbors")->capture_default_str();
    train->add_option("--thr", ssl_flags.thr, "similitude threshold")->capture_default_str();
    train->add_option("--t2label", ssl_flags.t2label, "pseudo-label bit threshold")
        ->capture_default_str();
    train->add_option("--max-iterations", ssl_flags.max_iterations, "pseudo-labeling cap")
        ->capture_default_str();
    train->add_option("--k-step-iters", ssl_flags.k_step_iters, "V3 growth period")
        ->capture_default_str();
    train->add_option("--sisi-n", ssl_flags.sisi_n, "outer similitude radius multiplier")
        ->capture_default_str();
    train->add_option("--confidence", confidence, "self-training adoption threshold")
        ->capture_default_str();
    train->add_option("--max-rounds", max_rounds, "self-training round cap")
        ->capture_default_str();
    forest.attach(train);

    // predict
    auto* predict = app.add_subcommand("predict", "Write per-node probabilities for a feature CSV");
    std::string model_dir, pred_out;
    bool raw = false;
    predict->add_option("--model", model_dir, "bundle directory")->required();
    predict->add_option("--features", features, "features.csv")->required();
    predict->add_option("--out", pred_out, "output CSV")->required();
    predict->add_flag("--raw", raw, "skip hierarchical post-processing");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a bundle on a labeled set");
    std::string metrics_out;
    double threshold = 0.5;
    evaluate->add_option("--model", model_dir, "bundle directory")->required();
    evaluate->add_option("--features", features, "features.csv")->required();
    evaluate->add_option("--labels", labels, "labels.txt")->required();
    evaluate->add_option("--out", metrics_out, "metrics CSV")->required();
    evaluate->add_option("--threshold", threshold, "micro precision/recall threshold")
        ->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the artificial dataset");
    std::uint64_t synth_seed = 0;
    int with_validation = 0;
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--with-validation", with_validation,
                      "also emit train/valid sets of this size for the benchmark layout")
        ->capture_default_str();

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark",
                                         "Labeled-fraction protocol with validation tuning");
    std::vector<std::string> data_dirs;
    BenchmarkOptions options;
    std::string methods_csv;
    benchmark->add_option("--data", data_dirs, "dataset directories (train/valid/test layout)")
        ->required();
    benchmark->add_option("--out", out_dir, "report output directory")->required();
    benchmark->add_option("--fractions", options.fractions, "labeled fractions");
    benchmark->add_option("--reps", options.repetitions, "splits per fraction")
        ->capture_default_str();
    benchmark->add_option("--thr-grid", options.thr_grid, "similitude threshold grid");
    benchmark->add_option("--k-grid", options.k_grid, "neighbor count grid");
    benchmark->add_option("--t2label", options.t2label, "pseudo-label bit threshold")
        ->capture_default_str();
    benchmark->add_option("--max-iterations", options.max_iterations, "pseudo-labeling cap")
        ->capture_default_str();
    benchmark->add_option("--methods", methods_csv, "comma-separated method subset");
    benchmark->add_option("--alpha", options.alpha, "significance level")->capture_default_str();
    benchmark->add_option("--confidence", options.confidence, "self-training adoption threshold")
        ->capture_default_str();
    benchmark->add_option("--max-rounds", options.max_rounds, "self-training round cap")
        ->capture_default_str();
    benchmark->add_option("--trees", options.base.n_trees, "trees per node classifier")
        ->capture_default_str();
    benchmark->add_option("--seed", options.seed, "root seed")->capture_default_str();

    // stats
    auto* stats = app.add_subcommand("stats", "Rank/Friedman/Nemenyi report from a results CSV");
    std::string results_path;
    double alpha = 0.05;
    stats->add_option("--results", results_path, "results.csv from benchmark")->required();
    stats->add_option("--out", out_dir, "report output directory")->required();
    stats->add_option("--alpha", alpha, "significance level")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        ssl_flags.seed = forest.seed;
        if (train->parsed()) {
            return cmd_train(method, features, labels, hierarchy, unlabeled_features, out_dir,
                             policy_name, forest, ssl_flags, confidence, max_rounds);
        }
        if (predict->parsed()) return cmd_predict(model_dir, features, pred_out, raw);
        if (evaluate->parsed()) {
            return cmd_evaluate(model_dir, features, labels, metrics_out, threshold);
        }
        if (synth->parsed()) return cmd_synth(synth_seed, out_dir, with_validation);
        if (benchmark->parsed()) {
            if (!methods_csv.empty()) {
                options.methods.clear();
                std::stringstream ss(methods_csv);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (!tok.empty()) options.methods.push_back(tok);
                }
            }
            return cmd_benchmark(data_dirs, options, out_dir);
        }
        if (stats->parsed()) return cmd_stats(results_path, out_dir, alpha);
        std::cerr << "error: Usage: no subcommand\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: ParseError: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: DataError: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return kExitInternal;
    }
}
