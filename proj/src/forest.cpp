#include "sshmc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sshmc/errors.hpp"
#include "sshmc/parallel.hpp"
#include "sshmc/rng.hpp"

namespace sshmc {

std::string to_string(MaxFeatures rule) {
    switch (rule) {
        case MaxFeatures::kSqrt: return "sqrt";
        case MaxFeatures::kLog2: return "log2";
        case MaxFeatures::kAll: return "all";
    }
    return "sqrt";
}

MaxFeatures max_features_from_string(const std::string& s) {
    if (s == "sqrt") return MaxFeatures::kSqrt;
    if (s == "log2") return MaxFeatures::kLog2;
    if (s == "all") return MaxFeatures::kAll;
    throw Error("unknown max_features rule: '" + s + "'");
}

std::vector<double> ConstantClassifier::predict_proba(const Matrix& features) const {
    return std::vector<double>(features.rows(), p_);
}

namespace {

void write_hex(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    out << buf;
}

double read_hex(std::istream& in, const char* what) {
    std::string token;
    if (!(in >> token)) throw ParseError(std::string("model: missing ") + what);
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw ParseError(std::string("model: bad ") + what + " '" + token + "'");
    }
    return v;
}

double gini(std::size_t pos, std::size_t total) {
    if (total == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

std::size_t subset_size(MaxFeatures rule, std::size_t d) {
    switch (rule) {
        case MaxFeatures::kSqrt:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
        case MaxFeatures::kLog2:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::log2(static_cast<double>(d))));
        case MaxFeatures::kAll:
            return d;
    }
    return d;
}

// Sort key that tolerates NaNs by ordering them last.
inline bool value_less(double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
}

struct TreeBuilder {
    const Matrix& X;
    const std::vector<std::uint8_t>& y;
    const RandomForestConfig& config;
    Rng rng;
    std::vector<RandomForest::Node> nodes;

    std::int32_t build(std::vector<std::size_t>& samples, int depth) {
        const std::size_t total = samples.size();
        std::size_t pos = 0;
        for (std::size_t i : samples) pos += y[i];

        const bool pure = (pos == 0 || pos == total);
        const bool too_small = total < static_cast<std::size_t>(config.min_samples_split);
        const bool too_deep = config.max_depth >= 0 && depth >= config.max_depth;
        if (pure || too_small || too_deep) return make_leaf(pos, total);

        const std::size_t d = X.cols();
        const std::size_t m = subset_size(config.max_features, d);
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            std::swap(features[i], features[i + rng.below(d - i)]);
        }
        features.resize(m);
        std::sort(features.begin(), features.end());

        const double parent_impurity = gini(pos, total);
        double best_gain = 0.0;
        std::size_t best_feature = d;
        double best_threshold = 0.0;

        std::vector<std::pair<double, std::uint8_t>> column(total);
        for (std::size_t f : features) {
            for (std::size_t i = 0; i < total; ++i) {
                column[i] = {X(samples[i], f), y[samples[i]]};
            }
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return value_less(a.first, b.first); });
            std::size_t left_pos = 0;
            for (std::size_t i = 0; i + 1 < total; ++i) {
                left_pos += column[i].second;
                if (!(column[i].first < column[i + 1].first)) continue;
                const double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
                const std::size_t nl = i + 1;
                const std::size_t nr = total - nl;
                const double weighted = (static_cast<double>(nl) * gini(left_pos, nl) +
                                         static_cast<double>(nr) * gini(pos - left_pos, nr)) /
                                        static_cast<double>(total);
                const double gain = parent_impurity - weighted;
                // Strict improvement keeps the lowest feature index and the
                // lowest threshold on ties.
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = threshold;
                }
            }
        }
        if (best_feature == d) return make_leaf(pos, total);

        std::vector<std::size_t> left, right;
        left.reserve(total);
        right.reserve(total);
        for (std::size_t i : samples) {
            const double v = X(i, best_feature);
            if (!std::isnan(v) && v <= best_threshold) {
                left.push_back(i);
            } else {
                right.push_back(i);
            }
        }
        samples.clear();
        samples.shrink_to_fit();

        const std::int32_t id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        const std::int32_t left_id = build(left, depth + 1);
        const std::int32_t right_id = build(right, depth + 1);
        RandomForest::Node& node = nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<std::int32_t>(best_feature);
        node.threshold = best_threshold;
        node.left = left_id;
        node.right = right_id;
        return id;
    }

    std::int32_t make_leaf(std::size_t pos, std::size_t total) {
        const std::int32_t id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        nodes[id].value = total ? static_cast<double>(pos) / static_cast<double>(total) : 0.0;
        return id;
    }
};

}  // namespace

double RandomForest::Tree::predict(std::span<const double> x) const {
    std::int32_t id = 0;
    while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const Node& node = nodes[static_cast<std::size_t>(id)];
        const double v = x[static_cast<std::size_t>(node.feature)];
        id = (!std::isnan(v) && v <= node.threshold) ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(id)].value;
}

std::vector<double> RandomForest::predict_proba(const Matrix& features) const {
    if (features.rows() > 0 && features.cols() != n_features_) {
        throw WidthMismatchError("predict_proba: expected " + std::to_string(n_features_) +
                                 " features, got " + std::to_string(features.cols()));
    }
    std::vector<double> out(features.rows(), 0.0);
    const double scale = 1.0 / static_cast<double>(trees_.size());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        double sum = 0.0;
        for (const Tree& tree : trees_) sum += tree.predict(features.row(r));
        out[r] = sum * scale;
    }
    return out;
}

std::unique_ptr<BinaryClassifier> fit_forest(const RandomForestConfig& config,
                                             const Matrix& features,
                                             const std::vector<std::uint8_t>& targets,
                                             FitNotice* notice) {
    if (features.rows() == 0) throw Error("fit_forest: no training rows");
    if (targets.size() != features.rows()) {
        throw LengthMismatchError("fit_forest: " + std::to_string(targets.size()) +
                                  " targets for " + std::to_string(features.rows()) + " rows");
    }
    if (config.n_trees < 1) throw Error("fit_forest: n_trees must be >= 1");

    std::size_t pos = 0;
    for (std::uint8_t t : targets) pos += t;
    if (notice) *notice = FitNotice::kNone;
    if (pos == 0 || pos == targets.size()) {
        if (notice) *notice = pos == 0 ? FitNotice::kAllNegative : FitNotice::kAllPositive;
        return std::make_unique<ConstantClassifier>(pos == 0 ? 0.0 : 1.0, features.cols());
    }

    auto forest = std::make_unique<RandomForest>();
    forest->config_ = config;
    forest->n_features_ = features.cols();
    forest->trees_.resize(static_cast<std::size_t>(config.n_trees));
    const std::size_t n = features.rows();

    parallel_for(static_cast<std::size_t>(config.n_trees), [&](std::size_t t) {
        TreeBuilder builder{features, targets, config,
                            Rng(Rng::derive(config.seed, "tree", t)), {}};
        std::vector<std::size_t> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i) bootstrap[i] = builder.rng.below(n);
        builder.build(bootstrap, 0);
        forest->trees_[t].nodes = std::move(builder.nodes);
    });
    return forest;
}

void ConstantClassifier::save(std::ostream& out) const {
    out << "constant " << n_features_ << " ";
    write_hex(out, p_);
    out << "\n";
}

void RandomForest::save(std::ostream& out) const {
    out << "forest v1\n";
    out << "n_features " << n_features_ << "\n";
    out << "config n_trees=" << config_.n_trees << " max_features=" << to_string(config_.max_features)
        << " min_samples_split=" << config_.min_samples_split << " max_depth=" << config_.max_depth
        << " seed=" << config_.seed << "\n";
    out << "trees " << trees_.size() << "\n";
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        out << "tree " << t << " nodes " << trees_[t].nodes.size() << "\n";
        for (const Node& node : trees_[t].nodes) {
            out << node.feature << " ";
            write_hex(out, node.threshold);
            out << " " << node.left << " " << node.right << " ";
            write_hex(out, node.value);
            out << "\n";
        }
    }
}

std::unique_ptr<BinaryClassifier> load_classifier(std::istream& in) {
    std::string tag;
    if (!(in >> tag)) throw ParseError("model: empty stream");
    if (tag == "constant") {
        std::size_t n_features = 0;
        if (!(in >> n_features)) throw ParseError("model: missing constant feature count");
        const double p = read_hex(in, "constant value");
        return std::make_unique<ConstantClassifier>(p, n_features);
    }
    if (tag != "forest") throw ParseError("model: unknown tag '" + tag + "'");
    std::string version;
    in >> version;
    if (version != "v1") throw ParseError("model: unsupported forest version '" + version + "'");

    auto forest = std::make_unique<RandomForest>();
    std::string key;
    in >> key >> forest->n_features_;
    if (key != "n_features") throw ParseError("model: expected n_features");
    in >> key;
    if (key != "config") throw ParseError("model: expected config");
    for (int i = 0; i < 5; ++i) {
        std::string kv;
        in >> kv;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("model: bad config entry '" + kv + "'");
        const std::string k = kv.substr(0, eq);
        const std::string v = kv.substr(eq + 1);
        if (k == "n_trees") {
            forest->config_.n_trees = std::stoi(v);
        } else if (k == "max_features") {
            forest->config_.max_features = max_features_from_string(v);
        } else if (k == "min_samples_split") {
            forest->config_.min_samples_split = std::stoi(v);
        } else if (k == "max_depth") {
            forest->config_.max_depth = std::stoi(v);
        } else if (k == "seed") {
            forest->config_.seed = std::stoull(v);
        } else {
            throw ParseError("model: unknown config key '" + k + "'");
        }
    }
    std::size_t n_trees = 0;
    in >> key >> n_trees;
    if (key != "trees") throw ParseError("model: expected trees");
    forest->trees_.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::size_t index = 0;
        std::size_t n_nodes = 0;
        in >> key >> index;
        if (key != "tree" || index != t) throw ParseError("model: bad tree header");
        in >> key >> n_nodes;
        if (key != "nodes") throw ParseError("model: bad tree header");
        forest->trees_[t].nodes.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            RandomForest::Node& node = forest->trees_[t].nodes[i];
            if (!(in >> node.feature)) throw ParseError("model: truncated tree");
            node.threshold = read_hex(in, "threshold");
            if (!(in >> node.left >> node.right)) throw ParseError("model: truncated tree");
            node.value = read_hex(in, "leaf value");
        }
    }
    return forest;
}

}  // namespace sshmc
