#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sshmc/dataset.hpp"
#include "sshmc/forest.hpp"
#include "sshmc/lcn.hpp"
#include "sshmc/matrix.hpp"

namespace sshmc {

struct SelfTrainConfig {
    double confidence = 0.75;  // adoption threshold, in (0.5, 1]
    int max_rounds = 5;
    RandomForestConfig base;
};

// Per-label self-trained classifier set. STML predicts raw per-label
// probabilities; STHC applies the hierarchical post-processing.
struct SelfTrainModel {
    std::shared_ptr<const Hierarchy> hierarchy;
    std::vector<std::unique_ptr<BinaryClassifier>> node_models;
    bool post_process_output = false;
    SelfTrainConfig config;

    Matrix predict_raw(const Matrix& features) const;
    // Raw for STML, post-processed for STHC.
    Matrix predict(const Matrix& features) const;
};

// Adoption bookkeeping for inspection and tests.
struct SelfTrainStats {
    std::vector<int> rounds;  // per node
    std::vector<std::vector<std::pair<std::size_t, std::uint8_t>>> adopted;  // per node
};

// Per-label self-training with less-inclusive example selection; the
// hierarchy is ignored during training and prediction.
SelfTrainModel fit_stml(const Dataset& labeled, const Matrix& unlabeled_features,
                        const SelfTrainConfig& config, SelfTrainStats* stats = nullptr);

// Per-node self-training with the same balanced bottom-up selection as the
// supervised classifier; predictions are post-processed to satisfy the
// hierarchical probability constraint.
SelfTrainModel fit_sthc(const Dataset& labeled, const Matrix& unlabeled_features,
                        const SelfTrainConfig& config, SelfTrainStats* stats = nullptr);

}  // namespace sshmc
