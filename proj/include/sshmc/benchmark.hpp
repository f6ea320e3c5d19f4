#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sshmc/baselines.hpp"
#include "sshmc/dataset.hpp"
#include "sshmc/evaluation.hpp"
#include "sshmc/ssl.hpp"

namespace sshmc {

// One dataset with the partitions the protocol needs.
struct BenchmarkDataset {
    std::string id;
    Dataset train;
    Dataset validation;
    Dataset test;
};

struct BenchmarkOptions {
    std::vector<double> fractions = {0.1, 0.3, 0.5, 0.7, 0.9};
    int repetitions = 3;
    std::vector<double> thr_grid = {0.3, 0.5, 0.7};
    std::vector<int> k_grid = {3, 4, 5};
    double t2label = 0.5;
    int max_iterations = 50;
    int k_step_iters = 10;
    double sisi_n = 2.0;
    std::vector<std::string> methods = {"lcn", "sshmc-v1", "sshmc-v2", "sshmc-v3",
                                        "stml", "sthc"};
    RandomForestConfig base;
    double confidence = 0.75;  // STML/STHC adoption threshold
    int max_rounds = 5;
    double micro_threshold = 0.5;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

struct RunRow {
    std::string dataset;
    double fraction = 0.0;
    int repetition = 0;
    std::string method;
    double ap = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double seconds = 0.0;
    // Tuned hyperparameters where applicable.
    std::optional<int> k;
    std::optional<double> thr;
    bool failed = false;
    std::string error;
};

struct BenchmarkReport {
    std::vector<RunRow> rows;                     // one per (dataset, fraction, rep, method)
    std::vector<RunRow> averaged;                 // repetitions averaged out
    std::optional<ComparisonReport> comparison;   // over dataset x fraction blocks
};

BenchmarkReport run_benchmark(const std::vector<BenchmarkDataset>& datasets,
                              const BenchmarkOptions& options,
                              const std::filesystem::path* manifest_dir = nullptr);

// Builds the rank/Friedman/Nemenyi comparison from result rows (repetitions
// averaged per dataset x fraction block first).
std::optional<ComparisonReport> compare_from_rows(const std::vector<RunRow>& rows, double alpha);

void write_results_csv(std::ostream& out, const std::vector<RunRow>& rows);
std::vector<RunRow> read_results_csv(std::istream& in);

// Loads `<set>.features.csv` + `<set>.labels.txt` for train/valid(ation)/test
// against `hierarchy.txt` in `dir`.
BenchmarkDataset load_benchmark_dataset(const std::filesystem::path& dir, const std::string& id);

}  // namespace sshmc
