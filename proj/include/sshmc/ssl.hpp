#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sshmc/dataset.hpp"
#include "sshmc/lcn.hpp"
#include "sshmc/matrix.hpp"

namespace sshmc {

// V1: the plain loop. V2: a pseudo-labeled instance never counts itself among
// its neighbors. V3: as V1, with k growing by one every k_step_iters
// iterations.
enum class Variant { kV1, kV2, kV3 };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& s);

struct SshmcConfig {
    int k = 3;                  // nearest labeled neighbors, >= 2
    double thr = 0.5;           // minimum similitude for a pseudo-label to stay valid
    double t2label = 0.5;       // per-label neighbor frequency threshold
    int max_iterations = 50;
    Variant variant = Variant::kV1;
    int k_step_iters = 10;      // V3 growth period
    double sisi_n = 2.0;        // outer similitude radius multiplier, > 1
    std::uint64_t seed = 0;
};

// Ids of the k nearest pool rows by Euclidean distance; ties broken by lower
// pool id. `exclude_self` omits that pool row.
std::vector<std::size_t> nearest_labeled_neighbors(int k, std::span<const double> query,
                                                   const Matrix& pool,
                                                   std::optional<std::size_t> exclude_self = {});

// Mean pairwise Euclidean distance over k(k-1)/2 pairs; k >= 2.
double mean_pairwise_distance(const Matrix& points);
double mean_pairwise_distance(const Matrix& pool, const std::vector<std::size_t>& ids);

// Mean Euclidean distance from `query` to each point.
double mean_distance(std::span<const double> query, const Matrix& pool,
                     const std::vector<std::size_t>& ids);

// Similitude of an instance with a set of instances, in [0, 1]: 1 when the
// instance is no farther from the set than the set is from itself, 0 when it
// is at least n times farther, linear in between. A zero-spread set yields 1
// only for a zero-distance instance.
double sisi(std::span<const double> query, const Matrix& pool,
            const std::vector<std::size_t>& ids, double n);

struct PseudoLabelBuild {
    std::vector<double> ppsl;  // per-label neighbor frequency
    LabelVector psl;
    bool valid = false;        // at least one bit set
};

// Mean of the neighbors' label columns thresholded at t2label. Consistent
// neighbor rows always produce a consistent pseudo-label.
PseudoLabelBuild build_pseudo_label(const std::vector<const LabelVector*>& neighbor_labels,
                                    double t2label);

// Per-unlabeled-instance state for one iteration.
struct PseudoLabel {
    LabelVector bits;
    bool valid = false;
    std::vector<std::size_t> neighbors;  // ids into the iteration's pool
};

struct IterationRecord {
    int iteration = 0;
    std::size_t pool_size = 0;
    std::size_t n_valid = 0;
    std::size_t n_changed = 0;
    int current_k = 0;
};

struct SshmcResult {
    LcnModel model;
    std::vector<PseudoLabel> final_state;
    std::vector<IterationRecord> log;
};

// The full pseudo-labeling loop: neighbor search over the current pool,
// pseudo-label construction, similitude filtering, and pool growth until the
// pseudo-label matrix reaches a fixed point or the iteration cap; the final
// pool trains the LCN classifier.
SshmcResult run_sshmc_bli(const Dataset& labeled, const Matrix& unlabeled_features,
                          const SshmcConfig& config, Policy policy,
                          const RandomForestConfig& base);

// CSV: iteration,pool_size,n_valid,n_changed,current_k
void write_iteration_log_csv(std::ostream& out, const std::vector<IterationRecord>& log);

}  // namespace sshmc
