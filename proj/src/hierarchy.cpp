#include "sshmc/hierarchy.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "sshmc/errors.hpp"

namespace sshmc {

namespace {

void sort_unique(std::vector<NodeId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Hierarchy Hierarchy::from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                const std::vector<std::string>& roots) {
    std::vector<HierarchyLine> lines;
    lines.reserve(edges.size() + roots.size());
    for (const auto& [parent, child] : edges) lines.push_back({parent, child});
    for (const auto& name : roots) lines.push_back({"", name});
    return from_lines(lines);
}

Hierarchy Hierarchy::from_lines(const std::vector<HierarchyLine>& lines) {
    if (lines.empty()) {
        throw Error("hierarchy: no edges and no top-level declarations");
    }
    Hierarchy h;
    auto intern = [&h](const std::string& name) -> NodeId {
        if (name.empty()) throw Error("hierarchy: empty node name");
        if (name == "root") throw Error("hierarchy: node name 'root' is reserved");
        auto it = h.index_.find(name);
        if (it != h.index_.end()) return it->second;
        const NodeId id = static_cast<NodeId>(h.names_.size());
        h.index_.emplace(name, id);
        h.names_.push_back(name);
        h.parents_.emplace_back();
        return id;
    };

    for (const auto& line : lines) {
        if (line.parent.empty()) {
            const NodeId c = intern(line.child);
            h.parents_[c].push_back(kVirtualRoot);
        } else {
            const NodeId p = intern(line.parent);
            const NodeId c = intern(line.child);
            if (p == c) throw CycleError("hierarchy: self edge at '" + line.parent + "'");
            h.parents_[c].push_back(p);
        }
    }

    const std::size_t n = h.names_.size();
    // Nodes with no declared parent are top-level.
    for (std::size_t l = 0; l < n; ++l) {
        if (h.parents_[l].empty()) h.parents_[l].push_back(kVirtualRoot);
        sort_unique(h.parents_[l]);
    }

    h.children_.assign(n, {});
    for (std::size_t c = 0; c < n; ++c) {
        for (NodeId p : h.parents_[c]) {
            if (p == kVirtualRoot) {
                h.top_level_.push_back(static_cast<NodeId>(c));
            } else {
                h.children_[p].push_back(static_cast<NodeId>(c));
            }
        }
    }
    for (auto& ch : h.children_) sort_unique(ch);
    sort_unique(h.top_level_);

    // Kahn's algorithm over real edges; leftover nodes mean a cycle.
    std::vector<std::size_t> in_degree(n, 0);
    for (std::size_t c = 0; c < n; ++c) {
        for (NodeId p : h.parents_[c]) {
            if (p != kVirtualRoot) ++in_degree[c];
        }
    }
    std::deque<NodeId> ready;
    for (std::size_t l = 0; l < n; ++l) {
        if (in_degree[l] == 0) ready.push_back(static_cast<NodeId>(l));
    }
    h.topo_order_.reserve(n);
    while (!ready.empty()) {
        const NodeId l = ready.front();
        ready.pop_front();
        h.topo_order_.push_back(l);
        for (NodeId c : h.children_[l]) {
            if (--in_degree[c] == 0) ready.push_back(c);
        }
    }
    if (h.topo_order_.size() != n) {
        throw CycleError("hierarchy: edge set induces a cycle");
    }

    // Ancestor closure in topological order, then descendants as the inverse.
    h.ancestors_.assign(n, {});
    for (NodeId l : h.topo_order_) {
        std::set<NodeId> acc;
        for (NodeId p : h.parents_[l]) {
            if (p == kVirtualRoot) continue;
            acc.insert(p);
            acc.insert(h.ancestors_[p].begin(), h.ancestors_[p].end());
        }
        h.ancestors_[l].assign(acc.begin(), acc.end());
    }
    h.descendants_.assign(n, {});
    for (std::size_t l = 0; l < n; ++l) {
        for (NodeId a : h.ancestors_[l]) {
            h.descendants_[a].push_back(static_cast<NodeId>(l));
        }
    }
    for (auto& d : h.descendants_) sort_unique(d);

    h.siblings_.assign(n, {});
    for (std::size_t l = 0; l < n; ++l) {
        std::set<NodeId> sibs;
        for (NodeId p : h.parents_[l]) {
            const auto& fam = (p == kVirtualRoot) ? h.top_level_ : h.children_[p];
            sibs.insert(fam.begin(), fam.end());
        }
        sibs.erase(static_cast<NodeId>(l));
        h.siblings_[l].assign(sibs.begin(), sibs.end());
    }
    return h;
}

Hierarchy Hierarchy::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open hierarchy file: " + path.string());
    return parse(in, path.string());
}

Hierarchy Hierarchy::parse(std::istream& in, const std::string& origin) {
    std::vector<HierarchyLine> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected 'parent<TAB>child'");
        }
        std::string parent = line.substr(0, tab);
        std::string child = line.substr(tab + 1);
        if (parent.empty() || child.empty()) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty node name");
        }
        if (parent == "root") parent.clear();
        lines.push_back({std::move(parent), std::move(child)});
    }
    if (lines.empty()) {
        throw ParseError(origin + ": no hierarchy lines found");
    }
    return from_lines(lines);
}

void Hierarchy::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write hierarchy file: " + path.string());
    write(out);
}

void Hierarchy::write(std::ostream& out) const {
    // Emit an introducing line per node, in id order, so that reloading
    // assigns identical ids; the full edge set follows (duplicates are
    // deduplicated on load).
    const std::size_t n = names_.size();
    std::vector<bool> mentioned(n, false);
    for (std::size_t l = 0; l < n; ++l) {
        if (mentioned[l]) continue;
        if (has_virtual_root_parent(static_cast<NodeId>(l))) {
            out << "root\t" << names_[l] << "\n";
            mentioned[l] = true;
            continue;
        }
        NodeId earlier_parent = kVirtualRoot;
        for (NodeId p : parents_[l]) {
            if (p != kVirtualRoot && static_cast<std::size_t>(p) < l && mentioned[p]) {
                earlier_parent = p;
                break;
            }
        }
        if (earlier_parent != kVirtualRoot) {
            out << names_[earlier_parent] << "\t" << names_[l] << "\n";
            mentioned[l] = true;
            continue;
        }
        NodeId earlier_child = kVirtualRoot;
        for (NodeId c : children_[l]) {
            if (static_cast<std::size_t>(c) < l && mentioned[c]) {
                earlier_child = c;
                break;
            }
        }
        if (earlier_child != kVirtualRoot) {
            out << names_[l] << "\t" << names_[earlier_child] << "\n";
            mentioned[l] = true;
            continue;
        }
        // First mention was as the parent of the next id; introduce both.
        auto next_child = std::find(children_[l].begin(), children_[l].end(),
                                    static_cast<NodeId>(l + 1));
        if (next_child == children_[l].end()) {
            throw Error("hierarchy: node order is not representable in the text format");
        }
        out << names_[l] << "\t" << names_[l + 1] << "\n";
        mentioned[l] = true;
        mentioned[l + 1] = true;
    }
    for (std::size_t c = 0; c < n; ++c) {
        for (NodeId p : parents_[c]) {
            if (p == kVirtualRoot) {
                out << "root\t" << names_[c] << "\n";
            } else {
                out << names_[p] << "\t" << names_[c] << "\n";
            }
        }
    }
}

const std::string& Hierarchy::name(NodeId l) const {
    check_node(l);
    return names_[static_cast<std::size_t>(l)];
}

std::optional<NodeId> Hierarchy::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeId Hierarchy::id_of(const std::string& name) const {
    auto id = find(name);
    if (!id) throw IndexError("unknown node name: '" + name + "'");
    return *id;
}

const std::vector<NodeId>& Hierarchy::parents(NodeId l) const {
    check_node(l);
    return parents_[static_cast<std::size_t>(l)];
}

const std::vector<NodeId>& Hierarchy::children(NodeId l) const {
    check_node(l);
    return children_[static_cast<std::size_t>(l)];
}

const std::vector<NodeId>& Hierarchy::ancestors(NodeId l) const {
    check_node(l);
    return ancestors_[static_cast<std::size_t>(l)];
}

const std::vector<NodeId>& Hierarchy::descendants(NodeId l) const {
    check_node(l);
    return descendants_[static_cast<std::size_t>(l)];
}

const std::vector<NodeId>& Hierarchy::siblings(NodeId l) const {
    check_node(l);
    return siblings_[static_cast<std::size_t>(l)];
}

bool Hierarchy::has_virtual_root_parent(NodeId l) const {
    check_node(l);
    const auto& p = parents_[static_cast<std::size_t>(l)];
    return !p.empty() && p.front() == kVirtualRoot;
}

bool Hierarchy::is_consistent(const LabelVector& y) const {
    if (y.size() != names_.size()) {
        throw LengthMismatchError("label vector length " + std::to_string(y.size()) +
                                  " != node count " + std::to_string(names_.size()));
    }
    for (std::size_t l = 0; l < y.size(); ++l) {
        if (!y[l]) continue;
        for (NodeId a : ancestors_[l]) {
            if (!y[static_cast<std::size_t>(a)]) return false;
        }
    }
    return true;
}

LabelVector Hierarchy::ancestor_closure(const LabelVector& y) const {
    if (y.size() != names_.size()) {
        throw LengthMismatchError("label vector length " + std::to_string(y.size()) +
                                  " != node count " + std::to_string(names_.size()));
    }
    LabelVector out = y;
    for (std::size_t l = 0; l < y.size(); ++l) {
        if (!y[l]) continue;
        for (NodeId a : ancestors_[l]) {
            out[static_cast<std::size_t>(a)] = 1;
        }
    }
    return out;
}

bool Hierarchy::same_structure(const Hierarchy& other) const {
    return names_ == other.names_ && parents_ == other.parents_;
}

void Hierarchy::check_node(NodeId l) const {
    if (l < 0 || static_cast<std::size_t>(l) >= names_.size()) {
        throw IndexError("node id " + std::to_string(l) + " out of range [0, " +
                         std::to_string(names_.size()) + ")");
    }
}

}  // namespace sshmc
