#include "sshmc/baselines.hpp"

#include <algorithm>

#include "sshmc/errors.hpp"
#include "sshmc/parallel.hpp"
#include "sshmc/rng.hpp"

namespace sshmc {

namespace {

using Adoption = std::vector<std::pair<std::size_t, std::uint8_t>>;

// One node's self-training loop. Each round re-predicts the whole unlabeled
// set, adopts the confident instances, and refits; it stops when the adopted
// set repeats or the round budget runs out.
std::unique_ptr<BinaryClassifier> self_train_node(const Dataset& labeled,
                                                  const Matrix& unlabeled, Policy policy,
                                                  const SelfTrainConfig& config, NodeId node,
                                                  int* rounds_out, Adoption* adopted_out) {
    std::string notice;
    auto model = fit_node_classifier(labeled, policy, config.base, node, &notice);

    const Selection sel = select_examples(
        policy, *labeled.hierarchy, labeled.labels, node,
        Rng::derive(config.base.seed, "policy", static_cast<std::uint64_t>(node)));
    const std::size_t base_rows = sel.positives.size() + sel.negatives.size();

    Adoption adopted;
    int rounds = 0;
    if (unlabeled.rows() > 0 && !sel.positives.empty() && !sel.negatives.empty()) {
        const RandomForestConfig node_config = [&] {
            RandomForestConfig c = config.base;
            c.seed = Rng::derive(config.base.seed, "node", static_cast<std::uint64_t>(node));
            return c;
        }();
        for (int round = 1; round <= config.max_rounds; ++round) {
            const auto proba = model->predict_proba(unlabeled);
            Adoption next;
            for (std::size_t j = 0; j < proba.size(); ++j) {
                if (proba[j] >= config.confidence) {
                    next.emplace_back(j, 1);
                } else if (proba[j] <= 1.0 - config.confidence) {
                    next.emplace_back(j, 0);
                }
            }
            if (next == adopted) break;
            adopted = std::move(next);
            rounds = round;

            Matrix features(base_rows + adopted.size(), labeled.dims());
            std::vector<std::uint8_t> targets(features.rows(), 0);
            std::size_t r = 0;
            for (std::size_t i : sel.positives) {
                for (std::size_t c = 0; c < labeled.dims(); ++c) {
                    features(r, c) = labeled.features(i, c);
                }
                targets[r] = 1;
                ++r;
            }
            for (std::size_t i : sel.negatives) {
                for (std::size_t c = 0; c < labeled.dims(); ++c) {
                    features(r, c) = labeled.features(i, c);
                }
                ++r;
            }
            for (const auto& [j, target] : adopted) {
                for (std::size_t c = 0; c < labeled.dims(); ++c) {
                    features(r, c) = unlabeled(j, c);
                }
                targets[r] = target;
                ++r;
            }
            model = fit_forest(node_config, features, targets);
        }
    }
    if (rounds_out) *rounds_out = rounds;
    if (adopted_out) *adopted_out = std::move(adopted);
    return model;
}

SelfTrainModel fit_self_train(const Dataset& labeled, const Matrix& unlabeled, Policy policy,
                              bool post_process_output, const SelfTrainConfig& config,
                              SelfTrainStats* stats) {
    if (labeled.rows() == 0) throw Error("self-training: empty labeled set");
    if (unlabeled.rows() > 0 && unlabeled.cols() != labeled.dims()) {
        throw WidthMismatchError("self-training: unlabeled feature width mismatch");
    }
    if (!(config.confidence > 0.5 && config.confidence <= 1.0)) {
        throw Error("self-training: confidence must be in (0.5, 1]");
    }
    SelfTrainModel model;
    model.hierarchy = labeled.hierarchy;
    model.post_process_output = post_process_output;
    model.config = config;
    const std::size_t n_nodes = labeled.hierarchy->size();
    model.node_models.resize(n_nodes);
    std::vector<int> rounds(n_nodes, 0);
    std::vector<Adoption> adopted(n_nodes);
    parallel_for(n_nodes, [&](std::size_t l) {
        model.node_models[l] = self_train_node(labeled, unlabeled, policy, config,
                                               static_cast<NodeId>(l), &rounds[l], &adopted[l]);
    });
    if (stats) {
        stats->rounds = std::move(rounds);
        stats->adopted = std::move(adopted);
    }
    return model;
}

}  // namespace

Matrix SelfTrainModel::predict_raw(const Matrix& features) const {
    Matrix out(features.rows(), node_models.size());
    for (std::size_t l = 0; l < node_models.size(); ++l) {
        const auto column = node_models[l]->predict_proba(features);
        for (std::size_t r = 0; r < features.rows(); ++r) out(r, l) = column[r];
    }
    return out;
}

Matrix SelfTrainModel::predict(const Matrix& features) const {
    Matrix raw = predict_raw(features);
    return post_process_output ? post_process(*hierarchy, raw) : raw;
}

SelfTrainModel fit_stml(const Dataset& labeled, const Matrix& unlabeled_features,
                        const SelfTrainConfig& config, SelfTrainStats* stats) {
    return fit_self_train(labeled, unlabeled_features, Policy::kLessInclusive, false, config,
                          stats);
}

SelfTrainModel fit_sthc(const Dataset& labeled, const Matrix& unlabeled_features,
                        const SelfTrainConfig& config, SelfTrainStats* stats) {
    return fit_self_train(labeled, unlabeled_features, Policy::kBalancedBottomUp, true, config,
                          stats);
}

}  // namespace sshmc
