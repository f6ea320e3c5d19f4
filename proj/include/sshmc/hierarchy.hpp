#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sshmc/matrix.hpp"

namespace sshmc {

using NodeId = int;

// Implicit parent of top-level nodes. The virtual root carries no classifier
// and never occupies a LabelVector slot.
inline constexpr NodeId kVirtualRoot = -1;

// A named edge of the hierarchy file: `parent -> child`, or a top-level
// declaration when `parent` is empty.
struct HierarchyLine {
    std::string parent;  // empty = top-level declaration
    std::string child;
};

// Immutable rooted DAG of labels. Node ids are assigned by first mention in
// the input (parent before child within an edge), which is also the order the
// text format preserves. All structural relations are precomputed; instances
// are safe to share read-only across threads.
class Hierarchy {
public:
    // `edges` are (parent_name, child_name) pairs; `roots` declare top-level
    // nodes. Nodes with no declared parent are also treated as top-level.
    // Duplicate edges are deduplicated silently. Throws CycleError if the
    // edge set induces a cycle.
    static Hierarchy from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                const std::vector<std::string>& roots);

    // Same, from an ordered line script (what the file loader produces).
    static Hierarchy from_lines(const std::vector<HierarchyLine>& lines);

    // Text format: one `parent<TAB>child` edge per line, `root<TAB>name` for
    // top-level declarations, `#` comments. Node order in the file defines
    // node ids; save() emits a file that reloads with identical ids.
    static Hierarchy load(const std::filesystem::path& path);
    static Hierarchy parse(std::istream& in, const std::string& origin = "<stream>");
    void save(const std::filesystem::path& path) const;
    void write(std::ostream& out) const;

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& node_names() const { return names_; }
    const std::string& name(NodeId l) const;
    // Returns the node id for `name`, or nullopt if unknown.
    std::optional<NodeId> find(const std::string& name) const;
    NodeId id_of(const std::string& name) const;  // throws IndexError

    // Sorted; may contain kVirtualRoot. Never empty.
    const std::vector<NodeId>& parents(NodeId l) const;
    // Sorted real children.
    const std::vector<NodeId>& children(NodeId l) const;
    // Transitive closure of parents, excluding the virtual root. Sorted.
    const std::vector<NodeId>& ancestors(NodeId l) const;
    // Transitive closure of children. Sorted.
    const std::vector<NodeId>& descendants(NodeId l) const;
    // Nodes != l sharing at least one parent with l; the virtual root counts
    // as a shared parent for top-level nodes. Sorted.
    const std::vector<NodeId>& siblings(NodeId l) const;
    // Nodes whose parent set contains the virtual root.
    const std::vector<NodeId>& top_level() const { return top_level_; }
    // Every parent precedes its children.
    const std::vector<NodeId>& topo_order() const { return topo_order_; }

    bool has_virtual_root_parent(NodeId l) const;

    // True iff every set bit's ancestors are all set.
    bool is_consistent(const LabelVector& y) const;
    // Minimal consistent vector containing y. Idempotent.
    LabelVector ancestor_closure(const LabelVector& y) const;

    bool same_structure(const Hierarchy& other) const;

private:
    void check_node(NodeId l) const;

    std::vector<std::string> names_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::vector<NodeId>> ancestors_;
    std::vector<std::vector<NodeId>> descendants_;
    std::vector<std::vector<NodeId>> siblings_;
    std::vector<NodeId> top_level_;
    std::vector<NodeId> topo_order_;
};

}  // namespace sshmc
