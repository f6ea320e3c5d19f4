#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "sshmc/dataset.hpp"
#include "sshmc/errors.hpp"
#include "test_util.hpp"

using namespace sshmc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("sshmc_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("native load applies closure") {
    const auto dir = temp_dir("native");
    write_file(dir / "hierarchy.txt", "root\tA\nA\tB\nA\tC\nB\tD\nC\tD\n");
    write_file(dir / "features.csv", "f0,f1\n1.0,2.0\n3.0,?\n5.0,6.0\n");
    write_file(dir / "labels.txt", "D\nB\nB;C\n");

    LoadStats stats;
    const Dataset ds =
        load_native(dir / "features.csv", dir / "labels.txt", dir / "hierarchy.txt", &stats);
    CHECK(ds.rows() == 3);
    CHECK(ds.dims() == 2);
    CHECK(ds.labels[0] == test::bits(*ds.hierarchy, {"A", "B", "C", "D"}));
    CHECK(ds.labels[1] == test::bits(*ds.hierarchy, {"A", "B"}));
    CHECK(ds.labels[2] == test::bits(*ds.hierarchy, {"A", "B", "C"}));
    CHECK(stats.rows_closed == 3);
    CHECK(std::isnan(ds.features(1, 1)));
}

TEST_CASE("native load rejects label-free instances") {
    const auto dir = temp_dir("native_empty");
    write_file(dir / "hierarchy.txt", "root\tA\n");
    write_file(dir / "features.csv", "f0\n1.0\n2.0\n");
    write_file(dir / "labels.txt", "A\n\n");
    CHECK_THROWS_WITH_AS(
        load_native(dir / "features.csv", dir / "labels.txt", dir / "hierarchy.txt"),
        doctest::Contains("labels.txt:2"), ParseError);
}

TEST_CASE("native save/load round trip") {
    const auto dir = temp_dir("native_rt");
    const ArtificialData data = generate_artificial(5);
    data.labeled.hierarchy->save(dir / "hierarchy.txt");
    save_native(data.labeled, dir / "features.csv", dir / "labels.txt");
    const Dataset back =
        load_native(dir / "features.csv", dir / "labels.txt", dir / "hierarchy.txt");
    CHECK(back.features == data.labeled.features);
    CHECK(back.labels == data.labeled.labels);
}

TEST_CASE("clus arff import") {
    const auto dir = temp_dir("arff");
    write_file(dir / "data.arff",
               "@RELATION toy\n"
               "@ATTRIBUTE a1 numeric\n"
               "@ATTRIBUTE a2 numeric\n"
               "@ATTRIBUTE class hierarchical root/A,A/B,A/C,B/D,C/D\n"
               "@DATA\n"
               "0.5,1.5,B\n"
               "1.0,?,B@A\n"
               "2.0,3.0,D@C\n");
    LoadStats stats;
    const Dataset ds = load_clus_arff(dir / "data.arff", &stats);
    CHECK(ds.rows() == 3);
    CHECK(ds.dims() == 2);
    CHECK(ds.hierarchy->size() == 4);
    CHECK(ds.labels[0] == test::bits(*ds.hierarchy, {"A", "B"}));
    CHECK(ds.labels[1] == test::bits(*ds.hierarchy, {"A", "B"}));
    CHECK(ds.labels[2] == test::bits(*ds.hierarchy, {"A", "B", "C", "D"}));
    CHECK(std::isnan(ds.features(1, 1)));

    write_file(dir / "bad.arff",
               "@attribute a1 numeric\n"
               "@attribute class hierarchical root/A\n"
               "@data\n"
               "1.0,Z\n");
    CHECK_THROWS_AS(load_clus_arff(dir / "bad.arff"), UnknownLabelError);
}

TEST_CASE("prune drops rare nodes") {
    auto h = std::make_shared<Hierarchy>(Hierarchy::from_edges({{"A", "B"}}, {"A"}));
    Dataset train = test::make_dataset(h, Matrix(100, 1), {});
    for (int i = 0; i < 100; ++i) {
        const bool with_b = i < 40;
        train.labels.push_back(with_b ? test::bits(*h, {"A", "B"}) : test::bits(*h, {"A"}));
        train.features(i, 0) = i;
    }
    // A has 100, B has 40.
    const PruneResult result = prune_rare_nodes(train, {}, 50);
    CHECK(result.hierarchy->size() == 1);
    CHECK(result.hierarchy->node_names() == std::vector<std::string>{"A"});
    CHECK(result.removed == std::vector<std::string>{"B"});
    CHECK(result.datasets[0].rows() == 100);

    const PruneResult noop = prune_rare_nodes(train, {}, 1);
    CHECK(noop.hierarchy->size() == 2);
    CHECK(noop.datasets[0].labels == train.labels);

    CHECK_THROWS_AS(prune_rare_nodes(train, {}, 101), EmptyHierarchyError);
}

TEST_CASE("prune re-parents through removed nodes") {
    auto h = std::make_shared<const Hierarchy>(test::diamond());
    Dataset train = test::make_dataset(h, Matrix(10, 1), {});
    // B appears 3 times, every other node 10 times, so only B is pruned and
    // D has to inherit B's surviving parent A.
    for (int i = 0; i < 10; ++i) {
        train.labels.push_back(i < 3 ? test::bits(*h, {"A", "B", "C", "D"})
                                     : test::bits(*h, {"A", "C", "D"}));
    }

    const PruneResult result = prune_rare_nodes(train, {}, 5);
    const Hierarchy& ph = *result.hierarchy;
    CHECK(ph.size() == 3);
    const std::vector<NodeId> expected = {ph.id_of("A"), ph.id_of("C")};
    CHECK(ph.parents(ph.id_of("D")) == expected);

    // Projected closure equals re-closure: pruning is a closure fixed point.
    for (const auto& row : result.datasets[0].labels) {
        CHECK(ph.is_consistent(row));
        CHECK(ph.ancestor_closure(row) == row);
    }
}

TEST_CASE("stratified split approximates per-label fractions") {
    auto h = std::make_shared<Hierarchy>(Hierarchy::from_edges({}, {"A", "B"}));
    Dataset ds = test::make_dataset(h, Matrix(10, 1), {});
    for (int i = 0; i < 10; ++i) {
        ds.labels.push_back(i < 4 ? test::bits(*h, {"A"}) : test::bits(*h, {"B"}));
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto masks = stratified_labeled_split(ds, {0.5, 1, seed});
        std::size_t a_labeled = 0;
        for (int i = 0; i < 4; ++i) a_labeled += masks[0].labeled[static_cast<std::size_t>(i)];
        CHECK(a_labeled >= 1);
        CHECK(a_labeled <= 3);
    }
}

TEST_CASE("stratified split masks partition the rows") {
    Rng rng(3);
    auto h = std::make_shared<const Hierarchy>(test::diamond());
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + rng.below(40);
        Dataset ds = test::make_dataset(h, Matrix(n, 2), {});
        for (std::size_t i = 0; i < n; ++i) {
            ds.labels.push_back(test::random_consistent_labels(*h, rng));
            if (ds.labels.back() == LabelVector(h->size(), 0)) {
                ds.labels.back() = test::bits(*h, {"A"});
            }
        }
        const double fraction = 0.1 + 0.8 * rng.uniform();
        const auto masks = stratified_labeled_split(ds, {fraction, 3, trial});
        CHECK(masks.size() == 3);
        for (const auto& pair : masks) {
            for (std::size_t r = 0; r < n; ++r) {
                CHECK(pair.labeled[r] + pair.unlabeled[r] == 1);
            }
        }
    }
}

TEST_CASE("stratified split: fraction 1.0 and determinism") {
    auto h = std::make_shared<const Hierarchy>(test::diamond());
    Dataset ds = test::make_dataset(h, Matrix(6, 1), {});
    for (int i = 0; i < 6; ++i) ds.labels.push_back(test::bits(*h, {"A"}));

    const auto all = stratified_labeled_split(ds, {1.0, 1, 9});
    CHECK(std::count(all[0].labeled.begin(), all[0].labeled.end(), 1) == 6);
    CHECK(std::count(all[0].unlabeled.begin(), all[0].unlabeled.end(), 1) == 0);

    const auto a = stratified_labeled_split(ds, {0.5, 3, 42});
    const auto b = stratified_labeled_split(ds, {0.5, 3, 42});
    for (int rep = 0; rep < 3; ++rep) {
        CHECK(a[static_cast<std::size_t>(rep)].labeled ==
              b[static_cast<std::size_t>(rep)].labeled);
    }
    // Different repetitions use different sub-seeds.
    CHECK((a[0].labeled != a[1].labeled || a[1].labeled != a[2].labeled));
}

TEST_CASE("impute_missing uses train statistics") {
    Matrix train(3, 2);
    train(0, 0) = 1.0;
    train(1, 0) = std::numeric_limits<double>::quiet_NaN();
    train(2, 0) = 3.0;
    train(0, 1) = 5.0;
    train(1, 1) = 5.0;
    train(2, 1) = 5.0;
    Matrix test(1, 2);
    test(0, 0) = std::numeric_limits<double>::quiet_NaN();
    test(0, 1) = 7.0;

    const ImputeResult result = impute_missing(train, {test});
    CHECK(result.train(1, 0) == doctest::Approx(2.0));
    CHECK(result.others[0](0, 0) == doctest::Approx(2.0));  // train mean, not test
    CHECK(result.others[0](0, 1) == 7.0);
    CHECK(result.column_means[0] == doctest::Approx(2.0));
    CHECK(result.all_missing == std::vector<std::uint8_t>{0, 0});

    // No missing values: identity.
    const ImputeResult id = impute_missing(result.train, {});
    CHECK(id.train == result.train);

    Matrix empty_col(2, 1, std::numeric_limits<double>::quiet_NaN());
    const ImputeResult flagged = impute_missing(empty_col, {});
    CHECK(flagged.all_missing == std::vector<std::uint8_t>{1});
    CHECK(flagged.train(0, 0) == 0.0);
}

TEST_CASE("artificial generator sizes, consistency, determinism") {
    const ArtificialData a = generate_artificial(123);
    CHECK(a.labeled.rows() == 12);
    CHECK(a.unlabeled.rows() == 330);
    CHECK(a.test.rows() == 300);
    CHECK(a.labeled.dims() == 2);

    const Hierarchy& h = *a.labeled.hierarchy;
    CHECK(h.size() == 6);
    CHECK(h.parents(h.id_of("4")) == std::vector<NodeId>{h.id_of("1"), h.id_of("2")});

    bool multi_path = false;
    for (const Dataset* ds : {&a.labeled, &a.unlabeled, &a.test}) {
        for (const auto& row : ds->labels) {
            CHECK(h.is_consistent(row));
            // Count most-specific bits in different top subtrees.
            if (row[static_cast<std::size_t>(h.id_of("3"))] &&
                row[static_cast<std::size_t>(h.id_of("5"))]) {
                multi_path = true;
            }
        }
    }
    CHECK(multi_path);

    const ArtificialData b = generate_artificial(123);
    CHECK(a.labeled.features == b.labeled.features);
    CHECK(a.unlabeled.features == b.unlabeled.features);
    CHECK(a.test.features == b.test.features);

    const ArtificialData c = generate_artificial(124);
    CHECK(a.labeled.features != c.labeled.features);
}

TEST_CASE("pipeline property: labels stay consistent through load/prune/split") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        auto h = std::make_shared<const Hierarchy>(test::random_dag(rng, 12));
        const std::size_t n = 30 + rng.below(30);
        Dataset ds = test::make_dataset(h, Matrix(n, 2), {});
        for (std::size_t i = 0; i < n; ++i) {
            auto row = test::random_consistent_labels(*h, rng);
            if (row == LabelVector(h->size(), 0)) row = h->ancestor_closure([&] {
                LabelVector y(h->size(), 0);
                y[0] = 1;
                return y;
            }());
            ds.labels.push_back(row);
        }
        const PruneResult pruned = prune_rare_nodes(ds, {}, 1 + static_cast<int>(rng.below(5)));
        for (const auto& row : pruned.datasets[0].labels) {
            CHECK(pruned.hierarchy->is_consistent(row));
        }
        const auto masks = stratified_labeled_split(pruned.datasets[0], {0.5, 1, trial});
        const Dataset labeled = select_rows(pruned.datasets[0], masks[0].labeled);
        for (const auto& row : labeled.labels) {
            CHECK(pruned.hierarchy->is_consistent(row));
        }
    }
}

TEST_SUITE_END();
