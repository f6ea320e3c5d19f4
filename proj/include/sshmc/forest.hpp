#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sshmc/matrix.hpp"

namespace sshmc {

enum class MaxFeatures { kSqrt, kLog2, kAll };

struct RandomForestConfig {
    int n_trees = 100;
    MaxFeatures max_features = MaxFeatures::kSqrt;
    int min_samples_split = 2;
    int max_depth = -1;  // -1 = unlimited
    std::uint64_t seed = 0;
};

std::string to_string(MaxFeatures rule);
MaxFeatures max_features_from_string(const std::string& s);

// Pluggable binary probabilistic classifier. Implementations are immutable
// after fit and safe to share across threads.
class BinaryClassifier {
public:
    virtual ~BinaryClassifier() = default;
    // One probability in [0, 1] per row of `features`.
    virtual std::vector<double> predict_proba(const Matrix& features) const = 0;
    virtual std::size_t n_features() const = 0;
    virtual void save(std::ostream& out) const = 0;
};

// Emitted instead of failing when a node's training targets are degenerate.
enum class FitNotice { kNone, kAllNegative, kAllPositive };

// Always predicts a fixed probability; used for degenerate targets.
class ConstantClassifier final : public BinaryClassifier {
public:
    explicit ConstantClassifier(double p, std::size_t n_features = 0)
        : p_(p), n_features_(n_features) {}
    std::vector<double> predict_proba(const Matrix& features) const override;
    std::size_t n_features() const override { return n_features_; }
    void save(std::ostream& out) const override;
    double value() const { return p_; }

private:
    double p_;
    std::size_t n_features_;
};

// Random forest of CART trees: bootstrap per tree, Gini split criterion over
// a per-split random feature subset, leaves store the positive fraction,
// prediction is the mean over trees. Per-tree randomness derives from
// (seed, tree index), so parallel and serial fits are identical.
class RandomForest final : public BinaryClassifier {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 = leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;  // leaf positive fraction
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(std::span<const double> x) const;
    };

    std::vector<double> predict_proba(const Matrix& features) const override;
    std::size_t n_features() const override { return n_features_; }
    void save(std::ostream& out) const override;

    const RandomForestConfig& config() const { return config_; }
    const std::vector<Tree>& trees() const { return trees_; }

private:
    friend std::unique_ptr<BinaryClassifier> fit_forest(const RandomForestConfig&, const Matrix&,
                                                        const std::vector<std::uint8_t>&,
                                                        FitNotice*);
    friend std::unique_ptr<BinaryClassifier> load_classifier(std::istream& in);

    RandomForestConfig config_;
    std::vector<Tree> trees_;
    std::size_t n_features_ = 0;
};

// Trains a forest; all-0 or all-1 targets yield a ConstantClassifier and set
// `notice` accordingly.
std::unique_ptr<BinaryClassifier> fit_forest(const RandomForestConfig& config,
                                             const Matrix& features,
                                             const std::vector<std::uint8_t>& targets,
                                             FitNotice* notice = nullptr);

// Reads back what BinaryClassifier::save wrote. Round-trips are exact.
std::unique_ptr<BinaryClassifier> load_classifier(std::istream& in);

}  // namespace sshmc
