#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "sshmc/errors.hpp"
#include "sshmc/hierarchy.hpp"
#include "test_util.hpp"

using namespace sshmc;
using test::bits;
using test::diamond;

TEST_SUITE_BEGIN("hierarchy");

TEST_CASE("diamond closure and parents") {
    const Hierarchy h = diamond();
    CHECK(h.size() == 4);
    const NodeId d = h.id_of("D");
    CHECK(h.parents(d) == std::vector<NodeId>{h.id_of("B"), h.id_of("C")});
    CHECK(h.ancestors(d) == std::vector<NodeId>{h.id_of("A"), h.id_of("B"), h.id_of("C")});
    CHECK(h.has_virtual_root_parent(h.id_of("A")));
}

TEST_CASE("singleton node") {
    const Hierarchy h = Hierarchy::from_edges({}, {"A"});
    CHECK(h.size() == 1);
    CHECK(h.parents(0) == std::vector<NodeId>{kVirtualRoot});
    CHECK(h.ancestors(0).empty());
}

TEST_CASE("two-cycle raises") {
    CHECK_THROWS_AS(Hierarchy::from_edges({{"A", "B"}, {"B", "A"}}, {}), CycleError);
}

TEST_CASE("duplicate edges are deduplicated") {
    const Hierarchy h = Hierarchy::from_edges({{"A", "B"}, {"A", "B"}, {"A", "B"}}, {"A"});
    CHECK(h.parents(h.id_of("B")) == std::vector<NodeId>{h.id_of("A")});
}

TEST_CASE("is_consistent") {
    const Hierarchy h = diamond();
    CHECK(h.is_consistent(bits(h, {"A", "B", "C", "D"})));
    CHECK_FALSE(h.is_consistent(bits(h, {"A", "B", "D"})));
    CHECK(h.is_consistent(bits(h, {})));
    CHECK_THROWS_AS(h.is_consistent(LabelVector(3, 0)), LengthMismatchError);
}

TEST_CASE("ancestor_closure") {
    const Hierarchy h = diamond();
    CHECK(h.ancestor_closure(bits(h, {"D"})) == bits(h, {"A", "B", "C", "D"}));
    const LabelVector consistent = bits(h, {"A", "B"});
    CHECK(h.ancestor_closure(consistent) == consistent);
    CHECK(h.ancestor_closure(bits(h, {"B", "C"})) == bits(h, {"A", "B", "C"}));
    CHECK_THROWS_AS(h.ancestor_closure(LabelVector(1, 0)), LengthMismatchError);
}

TEST_CASE("siblings") {
    const Hierarchy h = diamond();
    CHECK(h.siblings(h.id_of("B")) == std::vector<NodeId>{h.id_of("C")});

    const Hierarchy chain = Hierarchy::from_edges({{"A", "B"}, {"B", "C"}}, {"A"});
    CHECK(chain.siblings(chain.id_of("C")).empty());

    const Hierarchy forest = Hierarchy::from_edges({}, {"A", "E"});
    CHECK(forest.siblings(forest.id_of("A")) == std::vector<NodeId>{forest.id_of("E")});
    CHECK_THROWS_AS(forest.siblings(17), IndexError);
}

TEST_CASE("topo order is valid") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Hierarchy h = test::random_dag(rng);
        std::vector<std::size_t> position(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            position[static_cast<std::size_t>(h.topo_order()[i])] = i;
        }
        for (std::size_t l = 0; l < h.size(); ++l) {
            for (NodeId p : h.parents(static_cast<NodeId>(l))) {
                if (p == kVirtualRoot) continue;
                CHECK(position[static_cast<std::size_t>(p)] < position[l]);
            }
        }
    }
}

TEST_CASE("closure is consistent and monotone on random DAGs") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Hierarchy h = test::random_dag(rng);
        LabelVector y1(h.size(), 0);
        LabelVector y2(h.size(), 0);
        for (std::size_t l = 0; l < h.size(); ++l) {
            y1[l] = rng.below(4) == 0;
            y2[l] = y1[l] || rng.below(4) == 0;  // y1 subset of y2
        }
        const LabelVector c1 = h.ancestor_closure(y1);
        const LabelVector c2 = h.ancestor_closure(y2);
        CHECK(h.is_consistent(c1));
        CHECK(h.ancestor_closure(c1) == c1);
        for (std::size_t l = 0; l < h.size(); ++l) {
            if (c1[l]) CHECK(c2[l]);
        }
    }
}

TEST_CASE("text format round trip") {
    std::istringstream in(
        "# comment line\n"
        "root\tA\n"
        "A\tB\n"
        "A\tC\n"
        "B\tD\n"
        "C\tD\n");
    const Hierarchy h = Hierarchy::parse(in);
    CHECK(h.size() == 4);
    CHECK(h.node_names() == std::vector<std::string>{"A", "B", "C", "D"});

    std::ostringstream out;
    h.write(out);
    std::istringstream back(out.str());
    const Hierarchy reloaded = Hierarchy::parse(back);
    CHECK(reloaded.same_structure(h));
}

TEST_CASE("round trip preserves ids when a parent is declared late") {
    // X is mentioned before its non-root parent P.
    std::istringstream in(
        "root\tX\n"
        "P\tX\n"
        "root\tP\n");
    const Hierarchy h = Hierarchy::parse(in);
    CHECK(h.node_names() == std::vector<std::string>{"X", "P"});
    std::ostringstream out;
    h.write(out);
    std::istringstream back(out.str());
    CHECK(Hierarchy::parse(back).same_structure(h));
}

TEST_CASE("round trip on random DAGs") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const Hierarchy h = test::random_dag(rng);
        std::ostringstream out;
        h.write(out);
        std::istringstream back(out.str());
        CHECK(Hierarchy::parse(back).same_structure(h));
    }
}

TEST_CASE("parse errors carry line numbers") {
    std::istringstream in("root\tA\nbogus line without tab\n");
    CHECK_THROWS_WITH_AS(Hierarchy::parse(in, "h.txt"), doctest::Contains("h.txt:2"),
                         ParseError);
}

TEST_CASE("reserved root name") {
    CHECK_THROWS_AS(Hierarchy::from_edges({{"A", "root"}}, {"A"}), Error);
}

TEST_SUITE_END();
