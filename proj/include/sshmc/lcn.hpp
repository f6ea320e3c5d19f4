#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sshmc/dataset.hpp"
#include "sshmc/forest.hpp"
#include "sshmc/hierarchy.hpp"
#include "sshmc/matrix.hpp"

namespace sshmc {

// Rule choosing positive/negative training rows for one node's classifier.
enum class Policy {
    kLessInclusive,
    kInclusive,
    kSiblings,
    kExclusive,
    kBalancedBottomUp,
};

std::string to_string(Policy policy);
Policy policy_from_string(const std::string& s);

struct Selection {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
};

// Selects training rows for node `l`. `labels` rows must be consistent.
// `seed` drives the balanced bottom-up ring shuffles; the other policies are
// deterministic without it.
Selection select_examples(Policy policy, const Hierarchy& h,
                          const std::vector<LabelVector>& labels, NodeId l,
                          std::uint64_t seed = 0);

// One trained binary classifier per non-root node, plus the shared
// post-processing that enforces the hierarchical probability constraint.
struct LcnModel {
    std::shared_ptr<const Hierarchy> hierarchy;
    std::vector<std::unique_ptr<BinaryClassifier>> node_models;
    Policy policy = Policy::kBalancedBottomUp;
    RandomForestConfig base;
    std::vector<std::string> notices;  // per-node degenerate-target notes

    // Per-node probabilities with no hierarchy correction.
    Matrix predict_raw(const Matrix& features) const;
    // predict_raw followed by post_process.
    Matrix predict(const Matrix& features) const;
};

LcnModel fit_lcn(const Dataset& train, Policy policy, const RandomForestConfig& base);

// Top-down pass in topological order: every node's probability is capped by
// the smallest post-processed parent probability (virtual root = 1). Output
// rows satisfy the hierarchical probability constraint; idempotent.
Matrix post_process(const Hierarchy& h, const Matrix& raw);

// Shared by fit_lcn and the self-training baselines so that identical seeds
// produce identical per-node classifiers.
std::unique_ptr<BinaryClassifier> fit_node_classifier(const Dataset& train, Policy policy,
                                                      const RandomForestConfig& base, NodeId node,
                                                      std::string* notice);

}  // namespace sshmc
