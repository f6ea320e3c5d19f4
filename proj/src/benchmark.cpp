#include "sshmc/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sshmc/bundle.hpp"
#include "sshmc/errors.hpp"
#include "sshmc/rng.hpp"

namespace sshmc {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool is_sshmc(const std::string& method) { return method.rfind("sshmc-", 0) == 0; }

Variant variant_of(const std::string& method) {
    return variant_from_string(method.substr(std::string("sshmc-").size()));
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// A cell is one (dataset, fraction, repetition) context shared by every
// method.
struct Cell {
    const BenchmarkDataset& data;
    Dataset labeled;
    Matrix unlabeled;
    Matrix valid_features;
    Matrix test_features;
    std::uint64_t seed;
};

void audit_no_validation_rows(const Dataset& labeled, const BenchmarkDataset& data) {
    // Training pools come from train rows only; validation row names must
    // never appear among them.
    if (labeled.row_names.empty() || data.validation.row_names.empty()) return;
    for (const auto& name : labeled.row_names) {
        if (name.rfind("valid:", 0) == 0) {
            throw Error("benchmark: validation row '" + name + "' leaked into a training pool");
        }
    }
}

RunRow evaluate_method(const Cell& cell, const std::string& method,
                       const BenchmarkOptions& options,
                       const std::filesystem::path* manifest_dir, const std::string& cell_tag) {
    RunRow row;
    row.dataset = cell.data.id;
    row.method = method;
    const double started = now_seconds();
    Manifest manifest;
    manifest["dataset"] = cell.data.id;
    manifest["method"] = method;
    manifest["seed"] = std::to_string(cell.seed);
    manifest["t2label"] = std::to_string(options.t2label);

    RandomForestConfig base = options.base;
    base.seed = Rng::derive(cell.seed, "base-" + method);

    Matrix test_pred;
    if (method == "lcn") {
        const LcnModel model = fit_lcn(cell.labeled, Policy::kBalancedBottomUp, base);
        test_pred = model.predict(cell.test_features);
    } else if (method == "stml" || method == "sthc") {
        SelfTrainConfig config;
        config.confidence = options.confidence;
        config.max_rounds = options.max_rounds;
        config.base = base;
        manifest["confidence"] = std::to_string(config.confidence);
        manifest["max_rounds"] = std::to_string(config.max_rounds);
        const SelfTrainModel model = method == "stml"
                                         ? fit_stml(cell.labeled, cell.unlabeled, config)
                                         : fit_sthc(cell.labeled, cell.unlabeled, config);
        test_pred = model.predict(cell.test_features);
    } else if (is_sshmc(method)) {
        SshmcConfig config;
        config.variant = variant_of(method);
        config.t2label = options.t2label;
        config.max_iterations = options.max_iterations;
        config.k_step_iters = options.k_step_iters;
        config.sisi_n = options.sisi_n;
        config.seed = Rng::derive(cell.seed, "ssl-" + method);

        // Grid search scored on validation AP; the training pool never
        // includes validation rows. Ties go to smaller k, then smaller THR.
        double best_ap = -1.0;
        std::optional<SshmcResult> best;
        for (int k : options.k_grid) {
            for (double thr : options.thr_grid) {
                config.k = k;
                config.thr = thr;
                SshmcResult candidate = run_sshmc_bli(cell.labeled, cell.unlabeled, config,
                                                      Policy::kBalancedBottomUp, base);
                const double val_ap = average_precision(
                    candidate.model.predict(cell.valid_features), cell.data.validation.labels);
                if (val_ap > best_ap) {
                    best_ap = val_ap;
                    best = std::move(candidate);
                    row.k = k;
                    row.thr = thr;
                }
            }
        }
        manifest["k"] = std::to_string(*row.k);
        manifest["thr"] = std::to_string(*row.thr);
        manifest["validation_ap"] = std::to_string(best_ap);
        manifest["variant"] = to_string(config.variant);
        manifest["max_iterations"] = std::to_string(config.max_iterations);
        manifest["k_step_iters"] = std::to_string(config.k_step_iters);
        manifest["sisi_n"] = std::to_string(config.sisi_n);
        test_pred = best->model.predict(cell.test_features);
    } else {
        throw Error("benchmark: unknown method '" + method + "'");
    }

    row.ap = average_precision(test_pred, cell.data.test.labels);
    const MicroPR pr =
        micro_pr_at_threshold(test_pred, cell.data.test.labels, options.micro_threshold);
    row.micro_precision = pr.precision;
    row.micro_recall = pr.recall;
    row.seconds = now_seconds() - started;

    if (manifest_dir) {
        manifest["ap"] = std::to_string(row.ap);
        manifest["micro_precision"] = std::to_string(row.micro_precision);
        manifest["micro_recall"] = std::to_string(row.micro_recall);
        manifest["seconds"] = std::to_string(row.seconds);
        manifest["n_trees"] = std::to_string(options.base.n_trees);
        manifest["policy"] = method == "stml" ? "less_inclusive" : "balanced_bottom_up";
        std::filesystem::create_directories(*manifest_dir);
        write_manifest(*manifest_dir / (cell_tag + "_" + method + ".manifest"), manifest);
    }
    return row;
}

}  // namespace

BenchmarkReport run_benchmark(const std::vector<BenchmarkDataset>& datasets,
                              const BenchmarkOptions& options,
                              const std::filesystem::path* manifest_dir) {
    BenchmarkReport report;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        const BenchmarkDataset& data = datasets[d];
        for (std::size_t fi = 0; fi < options.fractions.size(); ++fi) {
            const double fraction = options.fractions[fi];
            SplitSpec spec;
            spec.labeled_fraction = fraction;
            spec.repetitions = options.repetitions;
            spec.seed = Rng::derive(options.seed, "split", d, fi);
            const auto masks = stratified_labeled_split(data.train, spec);
            for (int rep = 0; rep < options.repetitions; ++rep) {
                Cell cell{data,
                          select_rows(data.train, masks[static_cast<std::size_t>(rep)].labeled),
                          {},
                          {},
                          {},
                          Rng::derive(options.seed, "cell", d * 1000 + fi,
                                      static_cast<std::uint64_t>(rep))};
                const Dataset unlabeled_ds =
                    select_rows(data.train, masks[static_cast<std::size_t>(rep)].unlabeled);

                const ImputeResult imputed =
                    impute_missing(data.train.features, {cell.labeled.features,
                                                         unlabeled_ds.features,
                                                         data.validation.features,
                                                         data.test.features});
                cell.labeled.features = imputed.others[0];
                cell.unlabeled = imputed.others[1];
                cell.valid_features = imputed.others[2];
                cell.test_features = imputed.others[3];
                audit_no_validation_rows(cell.labeled, data);

                const std::string cell_tag = data.id + "_f" + std::to_string(fraction) + "_r" +
                                             std::to_string(rep);
                for (const auto& method : options.methods) {
                    RunRow row;
                    try {
                        row = evaluate_method(cell, method, options, manifest_dir, cell_tag);
                    } catch (const std::exception& e) {
                        row.dataset = data.id;
                        row.method = method;
                        row.failed = true;
                        row.error = e.what();
                    }
                    row.fraction = fraction;
                    row.repetition = rep;
                    report.rows.push_back(std::move(row));
                }
            }
        }
    }

    // Average repetitions per (dataset, fraction, method), keeping row order.
    std::map<std::string, std::size_t> index;
    for (const RunRow& row : report.rows) {
        if (row.failed) continue;
        const std::string key =
            row.dataset + "\x1f" + std::to_string(row.fraction) + "\x1f" + row.method;
        auto it = index.find(key);
        if (it == index.end()) {
            RunRow avg = row;
            avg.repetition = -1;
            avg.seconds = 0.0;
            avg.ap = 0.0;
            avg.micro_precision = 0.0;
            avg.micro_recall = 0.0;
            index.emplace(key, report.averaged.size());
            report.averaged.push_back(std::move(avg));
            it = index.find(key);
        }
        RunRow& avg = report.averaged[it->second];
        avg.ap += row.ap;
        avg.micro_precision += row.micro_precision;
        avg.micro_recall += row.micro_recall;
        avg.seconds += row.seconds;
    }
    std::map<std::string, int> counts;
    for (const RunRow& row : report.rows) {
        if (!row.failed) {
            counts[row.dataset + "\x1f" + std::to_string(row.fraction) + "\x1f" + row.method]++;
        }
    }
    for (auto& [key, idx] : index) {
        RunRow& avg = report.averaged[idx];
        const double n = counts[key];
        avg.ap /= n;
        avg.micro_precision /= n;
        avg.micro_recall /= n;
        avg.seconds /= n;
    }

    report.comparison = compare_from_rows(report.rows, options.alpha);
    return report;
}

std::optional<ComparisonReport> compare_from_rows(const std::vector<RunRow>& rows, double alpha) {
    // Blocks are dataset x fraction; methods are columns; repetitions are
    // averaged. Blocks missing any method are dropped.
    std::vector<std::string> methods;
    std::vector<std::string> blocks;
    std::map<std::string, std::map<std::string, std::pair<double, int>>> sums;
    for (const RunRow& row : rows) {
        if (row.failed) continue;
        const std::string block = row.dataset + " @" + std::to_string(row.fraction);
        if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) {
            methods.push_back(row.method);
        }
        if (std::find(blocks.begin(), blocks.end(), block) == blocks.end()) {
            blocks.push_back(block);
        }
        auto& cell = sums[block][row.method];
        cell.first += row.ap;
        cell.second += 1;
    }
    std::vector<std::string> complete_blocks;
    for (const auto& block : blocks) {
        if (sums[block].size() == methods.size()) complete_blocks.push_back(block);
    }
    if (methods.size() < 2 || complete_blocks.size() < 2) return std::nullopt;

    Matrix values(complete_blocks.size(), methods.size());
    for (std::size_t b = 0; b < complete_blocks.size(); ++b) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const auto& cell = sums[complete_blocks[b]][methods[m]];
            values(b, m) = cell.first / cell.second;
        }
    }
    return compare_algorithms(values, methods, /*higher_is_better=*/true, alpha);
}

void write_results_csv(std::ostream& out, const std::vector<RunRow>& rows) {
    out << "dataset,fraction,repetition,method,ap,micro_precision,micro_recall,seconds,k,thr,"
           "failed,error\n";
    for (const RunRow& row : rows) {
        out << csv_escape(row.dataset) << ',' << row.fraction << ',' << row.repetition << ','
            << row.method << ',' << row.ap << ',' << row.micro_precision << ','
            << row.micro_recall << ',' << row.seconds << ',';
        if (row.k) out << *row.k;
        out << ',';
        if (row.thr) out << *row.thr;
        out << ',' << (row.failed ? 1 : 0) << ',' << csv_escape(row.error) << '\n';
    }
}

std::vector<RunRow> read_results_csv(std::istream& in) {
    std::vector<RunRow> rows;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("results csv: empty input");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || (line[i] == ',' && !quoted)) {
                fields.push_back(field);
                field.clear();
            } else if (line[i] == '"') {
                quoted = !quoted;
            } else {
                field += line[i];
            }
        }
        if (fields.size() < 8) {
            throw ParseError("results csv:" + std::to_string(lineno) + ": too few fields");
        }
        RunRow row;
        row.dataset = fields[0];
        row.fraction = std::stod(fields[1]);
        row.repetition = std::stoi(fields[2]);
        row.method = fields[3];
        row.ap = std::stod(fields[4]);
        row.micro_precision = std::stod(fields[5]);
        row.micro_recall = std::stod(fields[6]);
        row.seconds = std::stod(fields[7]);
        if (fields.size() > 8 && !fields[8].empty()) row.k = std::stoi(fields[8]);
        if (fields.size() > 9 && !fields[9].empty()) row.thr = std::stod(fields[9]);
        if (fields.size() > 10 && !fields[10].empty()) row.failed = fields[10] == "1";
        if (fields.size() > 11) row.error = fields[11];
        rows.push_back(std::move(row));
    }
    return rows;
}

BenchmarkDataset load_benchmark_dataset(const std::filesystem::path& dir, const std::string& id) {
    const auto hierarchy_path = dir / "hierarchy.txt";
    auto hierarchy = std::make_shared<Hierarchy>(Hierarchy::load(hierarchy_path));
    auto load_set = [&](const std::string& set, bool required) {
        const auto features = dir / (set + ".features.csv");
        const auto labels = dir / (set + ".labels.txt");
        if (!std::filesystem::exists(features)) {
            if (required) {
                throw ParseError("benchmark dataset: missing " + features.string());
            }
            return Dataset{};
        }
        Dataset ds = load_native(features, labels, hierarchy);
        ds.row_names.reserve(ds.rows());
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            ds.row_names.push_back(set + ":" + std::to_string(r));
        }
        return ds;
    };
    BenchmarkDataset data;
    data.id = id;
    data.train = load_set("train", true);
    data.validation = load_set("valid", true);
    data.test = load_set("test", true);
    return data;
}

}  // namespace sshmc
