#include "sshmc/lcn.hpp"

#include <algorithm>
#include <set>

#include "sshmc/errors.hpp"
#include "sshmc/parallel.hpp"
#include "sshmc/rng.hpp"

namespace sshmc {

std::string to_string(Policy policy) {
    switch (policy) {
        case Policy::kLessInclusive: return "less_inclusive";
        case Policy::kInclusive: return "inclusive";
        case Policy::kSiblings: return "siblings";
        case Policy::kExclusive: return "exclusive";
        case Policy::kBalancedBottomUp: return "balanced_bottom_up";
    }
    return "balanced_bottom_up";
}

Policy policy_from_string(const std::string& s) {
    if (s == "less_inclusive") return Policy::kLessInclusive;
    if (s == "inclusive") return Policy::kInclusive;
    if (s == "siblings") return Policy::kSiblings;
    if (s == "exclusive") return Policy::kExclusive;
    if (s == "balanced_bottom_up") return Policy::kBalancedBottomUp;
    throw Error("unknown policy: '" + s + "'");
}

namespace {

bool any_bit(const LabelVector& row, const std::vector<NodeId>& nodes) {
    for (NodeId l : nodes) {
        if (row[static_cast<std::size_t>(l)]) return true;
    }
    return false;
}

// Set bits with no set descendant.
std::vector<std::uint8_t> most_specific(const Hierarchy& h, const LabelVector& row) {
    std::vector<std::uint8_t> out(row.size(), 0);
    for (std::size_t l = 0; l < row.size(); ++l) {
        if (!row[l]) continue;
        bool specific = true;
        for (NodeId d : h.descendants(static_cast<NodeId>(l))) {
            if (row[static_cast<std::size_t>(d)]) {
                specific = false;
                break;
            }
        }
        out[l] = specific;
    }
    return out;
}

Selection balanced_bottom_up(const Hierarchy& h, const std::vector<LabelVector>& labels,
                             NodeId node, std::uint64_t seed) {
    Selection sel;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r][static_cast<std::size_t>(node)]) sel.positives.push_back(r);
    }
    const std::size_t target = sel.positives.size();
    if (target == 0) return sel;

    // Ancestor levels by minimum upward distance; level 0 is the node itself.
    std::vector<std::vector<NodeId>> levels = {{node}};
    std::set<NodeId> visited = {node};
    while (true) {
        std::set<NodeId> next;
        for (NodeId l : levels.back()) {
            for (NodeId p : h.parents(l)) {
                if (p != kVirtualRoot && !visited.count(p)) next.insert(p);
            }
        }
        if (next.empty()) break;
        visited.insert(next.begin(), next.end());
        levels.emplace_back(next.begin(), next.end());
    }

    std::vector<bool> taken(labels.size(), false);
    std::set<NodeId> seen_ring_nodes;
    for (std::size_t ring = 0; ring < levels.size() && sel.negatives.size() < target; ++ring) {
        std::set<NodeId> ring_nodes;
        for (NodeId a : levels[ring]) {
            for (NodeId s : h.siblings(a)) {
                if (!seen_ring_nodes.count(s)) ring_nodes.insert(s);
            }
        }
        seen_ring_nodes.insert(ring_nodes.begin(), ring_nodes.end());
        if (ring_nodes.empty()) continue;

        std::vector<NodeId> ring_list(ring_nodes.begin(), ring_nodes.end());
        std::vector<std::size_t> candidates;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            if (taken[r] || labels[r][static_cast<std::size_t>(node)]) continue;
            if (any_bit(labels[r], ring_list)) candidates.push_back(r);
        }
        Rng rng(Rng::derive(seed, "bbu-ring", static_cast<std::uint64_t>(node), ring));
        rng.shuffle(candidates);
        for (std::size_t r : candidates) {
            if (sel.negatives.size() >= target) break;
            sel.negatives.push_back(r);
            taken[r] = true;
        }
    }
    std::sort(sel.negatives.begin(), sel.negatives.end());
    return sel;
}

}  // namespace

Selection select_examples(Policy policy, const Hierarchy& h,
                          const std::vector<LabelVector>& labels, NodeId node,
                          std::uint64_t seed) {
    for (const auto& row : labels) {
        if (row.size() != h.size()) {
            throw LengthMismatchError("select_examples: label row length mismatch");
        }
    }
    if (policy == Policy::kBalancedBottomUp) return balanced_bottom_up(h, labels, node, seed);

    Selection sel;
    const auto& sibs = h.siblings(node);
    const auto& ancs = h.ancestors(node);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const LabelVector& row = labels[r];
        const bool positive = row[static_cast<std::size_t>(node)] != 0;
        switch (policy) {
            case Policy::kLessInclusive:
                if (positive) {
                    sel.positives.push_back(r);
                } else {
                    sel.negatives.push_back(r);
                }
                break;
            case Policy::kInclusive:
                if (positive) {
                    sel.positives.push_back(r);
                } else if (!any_bit(row, ancs)) {
                    sel.negatives.push_back(r);
                }
                break;
            case Policy::kSiblings:
                if (positive) {
                    sel.positives.push_back(r);
                } else if (any_bit(row, sibs)) {
                    sel.negatives.push_back(r);
                }
                break;
            case Policy::kExclusive: {
                const auto specific = most_specific(h, row);
                if (specific[static_cast<std::size_t>(node)]) {
                    sel.positives.push_back(r);
                } else {
                    bool sandwiched = false;
                    for (NodeId s : sibs) {
                        if (specific[static_cast<std::size_t>(s)]) {
                            sandwiched = true;
                            break;
                        }
                    }
                    if (sandwiched) sel.negatives.push_back(r);
                }
                break;
            }
            case Policy::kBalancedBottomUp:
                break;
        }
    }
    return sel;
}

std::unique_ptr<BinaryClassifier> fit_node_classifier(const Dataset& train, Policy policy,
                                                      const RandomForestConfig& base, NodeId node,
                                                      std::string* notice) {
    const Hierarchy& h = *train.hierarchy;
    const Selection sel =
        select_examples(policy, h, train.labels, node, Rng::derive(base.seed, "policy", static_cast<std::uint64_t>(node)));
    if (sel.positives.empty()) {
        if (notice) *notice = "node " + h.name(node) + ": no positives, constant 0";
        return std::make_unique<ConstantClassifier>(0.0, train.dims());
    }
    if (sel.negatives.empty()) {
        if (notice) *notice = "node " + h.name(node) + ": no negatives, constant 1";
        return std::make_unique<ConstantClassifier>(1.0, train.dims());
    }
    Matrix features(sel.positives.size() + sel.negatives.size(), train.dims());
    std::vector<std::uint8_t> targets(features.rows(), 0);
    std::size_t r = 0;
    for (std::size_t i : sel.positives) {
        for (std::size_t c = 0; c < train.dims(); ++c) features(r, c) = train.features(i, c);
        targets[r] = 1;
        ++r;
    }
    for (std::size_t i : sel.negatives) {
        for (std::size_t c = 0; c < train.dims(); ++c) features(r, c) = train.features(i, c);
        ++r;
    }
    RandomForestConfig node_config = base;
    node_config.seed = Rng::derive(base.seed, "node", static_cast<std::uint64_t>(node));
    FitNotice fit_notice = FitNotice::kNone;
    auto model = fit_forest(node_config, features, targets, &fit_notice);
    if (notice && fit_notice != FitNotice::kNone) {
        *notice = "node " + h.name(node) + ": degenerate targets";
    }
    return model;
}

LcnModel fit_lcn(const Dataset& train, Policy policy, const RandomForestConfig& base) {
    if (train.rows() == 0) throw Error("fit_lcn: empty training set");
    if (train.labels.size() != train.rows()) {
        throw LengthMismatchError("fit_lcn: labels/features row mismatch");
    }
    LcnModel model;
    model.hierarchy = train.hierarchy;
    model.policy = policy;
    model.base = base;
    const std::size_t n_nodes = train.hierarchy->size();
    model.node_models.resize(n_nodes);
    std::vector<std::string> notices(n_nodes);
    parallel_for(n_nodes, [&](std::size_t l) {
        model.node_models[l] =
            fit_node_classifier(train, policy, base, static_cast<NodeId>(l), &notices[l]);
    });
    for (auto& notice : notices) {
        if (!notice.empty()) model.notices.push_back(std::move(notice));
    }
    return model;
}

Matrix LcnModel::predict_raw(const Matrix& features) const {
    Matrix out(features.rows(), node_models.size());
    for (std::size_t l = 0; l < node_models.size(); ++l) {
        const auto column = node_models[l]->predict_proba(features);
        for (std::size_t r = 0; r < features.rows(); ++r) out(r, l) = column[r];
    }
    return out;
}

Matrix LcnModel::predict(const Matrix& features) const {
    return post_process(*hierarchy, predict_raw(features));
}

Matrix post_process(const Hierarchy& h, const Matrix& raw) {
    if (raw.cols() != h.size()) {
        throw ShapeMismatchError("post_process: expected " + std::to_string(h.size()) +
                                 " columns, got " + std::to_string(raw.cols()));
    }
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        for (std::size_t l = 0; l < raw.cols(); ++l) {
            const double v = raw(r, l);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw RangeError("post_process: probability " + std::to_string(v) +
                                 " outside [0, 1]");
            }
        }
    }
    Matrix out = raw;
    for (NodeId l : h.topo_order()) {
        for (NodeId p : h.parents(l)) {
            if (p == kVirtualRoot) continue;
            for (std::size_t r = 0; r < out.rows(); ++r) {
                const double cap = out(r, static_cast<std::size_t>(p));
                double& v = out(r, static_cast<std::size_t>(l));
                if (v > cap) v = cap;
            }
        }
    }
    return out;
}

}  // namespace sshmc
