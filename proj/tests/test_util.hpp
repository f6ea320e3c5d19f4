#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sshmc/dataset.hpp"
#include "sshmc/hierarchy.hpp"
#include "sshmc/matrix.hpp"
#include "sshmc/rng.hpp"

namespace sshmc::test {

// A -> B, A -> C, B -> D, C -> D.
inline Hierarchy diamond() {
    return Hierarchy::from_edges({{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}}, {"A"});
}

inline LabelVector bits(const Hierarchy& h, const std::vector<std::string>& names) {
    LabelVector out(h.size(), 0);
    for (const auto& name : names) out[static_cast<std::size_t>(h.id_of(name))] = 1;
    return out;
}

// Cycle-free by construction: parents always have smaller ids.
inline Hierarchy random_dag(Rng& rng, std::size_t max_nodes = 30) {
    const std::size_t n = 2 + rng.below(max_nodes - 1);
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::string> roots = {"n0"};
    for (std::size_t i = 1; i < n; ++i) {
        const std::string child = "n" + std::to_string(i);
        const std::size_t n_parents = 1 + rng.below(std::min<std::size_t>(i, 3));
        for (std::size_t p = 0; p < n_parents; ++p) {
            edges.emplace_back("n" + std::to_string(rng.below(i)), child);
        }
        if (rng.below(8) == 0) roots.push_back(child);
    }
    return Hierarchy::from_edges(edges, roots);
}

inline LabelVector random_consistent_labels(const Hierarchy& h, Rng& rng) {
    LabelVector y(h.size(), 0);
    const std::size_t picks = 1 + rng.below(3);
    for (std::size_t i = 0; i < picks; ++i) {
        y[rng.below(h.size())] = 1;
    }
    return h.ancestor_closure(y);
}

inline Dataset make_dataset(std::shared_ptr<const Hierarchy> h, Matrix features,
                            std::vector<LabelVector> labels) {
    Dataset ds;
    ds.hierarchy = std::move(h);
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    return ds;
}

}  // namespace sshmc::test
