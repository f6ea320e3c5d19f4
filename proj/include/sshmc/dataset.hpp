#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sshmc/hierarchy.hpp"
#include "sshmc/matrix.hpp"

namespace sshmc {

// A hierarchical multi-label dataset. Feature entries may be NaN (missing);
// every label row satisfies the hierarchical constraint. `labels` may be
// empty for a purely unlabeled set.
struct Dataset {
    Matrix features;
    std::vector<LabelVector> labels;
    std::shared_ptr<const Hierarchy> hierarchy;
    std::vector<std::string> row_names;  // optional instance identifiers

    std::size_t rows() const { return features.rows(); }
    std::size_t dims() const { return features.cols(); }
};

struct SplitSpec {
    double labeled_fraction = 0.1;  // in (0, 1]
    int repetitions = 1;
    std::uint64_t seed = 0;
};

struct LoadStats {
    std::size_t rows_closed = 0;  // rows whose label set needed ancestor completion
};

// Native format: features.csv (header row, comma-separated reals, `?` =
// missing), labels.txt (one line per instance, semicolon-separated
// most-specific node names), hierarchy file per the hierarchy module.
Dataset load_native(const std::filesystem::path& features_path,
                    const std::filesystem::path& labels_path,
                    const std::filesystem::path& hierarchy_path,
                    LoadStats* stats = nullptr);
Dataset load_native(const std::filesystem::path& features_path,
                    const std::filesystem::path& labels_path,
                    std::shared_ptr<const Hierarchy> hierarchy,
                    LoadStats* stats = nullptr);

// ARFF-style import: the class attribute is declared `hierarchical` with a
// comma-separated list of parent/child edge tokens; instance class values are
// `@`-separated node references.
Dataset load_clus_arff(const std::filesystem::path& path, LoadStats* stats = nullptr);

void save_native(const Dataset& ds, const std::filesystem::path& features_path,
                 const std::filesystem::path& labels_path);

struct PruneResult {
    std::shared_ptr<const Hierarchy> hierarchy;
    std::vector<Dataset> datasets;       // train first, then the others
    std::vector<std::string> removed;    // names of pruned nodes
};

// Removes nodes with fewer than `min_count` positive training instances.
// Children of removed nodes are re-parented to their nearest surviving
// ancestors (or the virtual root). Rows are never dropped, only columns.
PruneResult prune_rare_nodes(const Dataset& train, const std::vector<Dataset>& others,
                             int min_count);

struct MaskPair {
    std::vector<std::uint8_t> labeled;
    std::vector<std::uint8_t> unlabeled;
};

// Greedy iterative stratification, rarest label first. Returns
// `spec.repetitions` mask pairs; each pair partitions the rows.
std::vector<MaskPair> stratified_labeled_split(const Dataset& ds, const SplitSpec& spec);

struct ImputeResult {
    Matrix train;
    std::vector<Matrix> others;
    std::vector<double> column_means;         // fitted on train only
    std::vector<std::uint8_t> all_missing;    // columns with no train value
};

// Per-column mean imputation fitted on `train`, applied to every set.
ImputeResult impute_missing(const Matrix& train, const std::vector<Matrix>& others);

struct ArtificialData {
    Dataset labeled;    // 12 instances
    Dataset unlabeled;  // 330 instances (ground-truth labels kept for reference)
    Dataset test;       // 300 instances
};

// Two-dimensional six-node benchmark generator: one Gaussian cluster per
// label configuration, one configuration spanning multiple paths and one
// requiring the multi-parent node.
ArtificialData generate_artificial(std::uint64_t seed);

// Row subset helper; copies features, labels and row names.
Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& row_ids);
Dataset select_rows(const Dataset& ds, const std::vector<std::uint8_t>& mask);

}  // namespace sshmc
