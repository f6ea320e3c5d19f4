#include "sshmc/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sshmc/errors.hpp"
#include "sshmc/parallel.hpp"

namespace sshmc {

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::kV1: return "v1";
        case Variant::kV2: return "v2";
        case Variant::kV3: return "v3";
    }
    return "v1";
}

Variant variant_from_string(const std::string& s) {
    if (s == "v1" || s == "V1") return Variant::kV1;
    if (s == "v2" || s == "V2") return Variant::kV2;
    if (s == "v3" || s == "V3") return Variant::kV3;
    throw Error("unknown variant: '" + s + "'");
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

}  // namespace

std::vector<std::size_t> nearest_labeled_neighbors(int k, std::span<const double> query,
                                                   const Matrix& pool,
                                                   std::optional<std::size_t> exclude_self) {
    if (k < 1) throw Error("nearest_labeled_neighbors: k must be >= 1");
    const std::size_t available = pool.rows() - (exclude_self ? 1 : 0);
    if (available < static_cast<std::size_t>(k)) {
        throw PoolTooSmallError("nearest_labeled_neighbors: pool of " +
                                std::to_string(pool.rows()) + " rows cannot supply k=" +
                                std::to_string(k) +
                                (exclude_self ? " excluding the instance itself" : ""));
    }
    if (query.size() != pool.cols()) {
        throw WidthMismatchError("nearest_labeled_neighbors: query width mismatch");
    }
    std::vector<std::pair<double, std::size_t>> distances;
    distances.reserve(available);
    for (std::size_t r = 0; r < pool.rows(); ++r) {
        if (exclude_self && r == *exclude_self) continue;
        distances.emplace_back(euclidean(query, pool.row(r)), r);
    }
    std::partial_sort(distances.begin(), distances.begin() + k, distances.end());
    std::vector<std::size_t> ids(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) ids[static_cast<std::size_t>(i)] = distances[static_cast<std::size_t>(i)].second;
    return ids;
}

double mean_pairwise_distance(const Matrix& points) {
    std::vector<std::size_t> ids(points.rows());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return mean_pairwise_distance(points, ids);
}

double mean_pairwise_distance(const Matrix& pool, const std::vector<std::size_t>& ids) {
    const std::size_t k = ids.size();
    if (k < 2) throw TooFewPointsError("mean_pairwise_distance: need at least 2 points");
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            sum += euclidean(pool.row(ids[i]), pool.row(ids[j]));
        }
    }
    return sum / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

double mean_distance(std::span<const double> query, const Matrix& pool,
                     const std::vector<std::size_t>& ids) {
    if (ids.empty()) throw TooFewPointsError("mean_distance: empty point set");
    double sum = 0.0;
    for (std::size_t id : ids) sum += euclidean(query, pool.row(id));
    return sum / static_cast<double>(ids.size());
}

double sisi(std::span<const double> query, const Matrix& pool,
            const std::vector<std::size_t>& ids, double n) {
    if (ids.size() < 2) throw TooFewPointsError("sisi: need at least 2 neighbors");
    if (!(n > 1.0)) throw Error("sisi: n must be > 1");
    const double lavg = mean_pairwise_distance(pool, ids);
    const double uavg = mean_distance(query, pool, ids);
    if (lavg == 0.0) return uavg == 0.0 ? 1.0 : 0.0;
    if (uavg <= lavg) return 1.0;
    if (uavg >= n * lavg) return 0.0;
    return (lavg - uavg) / ((n - 1.0) * lavg) + 1.0;
}

PseudoLabelBuild build_pseudo_label(const std::vector<const LabelVector*>& neighbor_labels,
                                    double t2label) {
    if (neighbor_labels.empty()) {
        throw TooFewPointsError("build_pseudo_label: no neighbor labels");
    }
    const std::size_t n_labels = neighbor_labels.front()->size();
    PseudoLabelBuild out;
    out.ppsl.assign(n_labels, 0.0);
    for (const LabelVector* row : neighbor_labels) {
        if (row->size() != n_labels) {
            throw LengthMismatchError("build_pseudo_label: neighbor row length mismatch");
        }
        for (std::size_t l = 0; l < n_labels; ++l) out.ppsl[l] += (*row)[l];
    }
    const double k = static_cast<double>(neighbor_labels.size());
    out.psl.assign(n_labels, 0);
    for (std::size_t l = 0; l < n_labels; ++l) {
        out.ppsl[l] /= k;
        if (out.ppsl[l] >= t2label) {
            out.psl[l] = 1;
            out.valid = true;
        }
    }
    return out;
}

namespace {

bool same_pseudo_labels(const std::vector<PseudoLabel>& a, const std::vector<PseudoLabel>& b) {
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j].valid != b[j].valid || a[j].bits != b[j].bits) return false;
    }
    return true;
}

}  // namespace

SshmcResult run_sshmc_bli(const Dataset& labeled, const Matrix& unlabeled_features,
                          const SshmcConfig& config, Policy policy,
                          const RandomForestConfig& base) {
    if (labeled.rows() == 0) throw Error("run_sshmc_bli: labeled set is empty");
    if (labeled.labels.size() != labeled.rows()) {
        throw LengthMismatchError("run_sshmc_bli: labeled set has no label rows");
    }
    if (unlabeled_features.rows() > 0 && unlabeled_features.cols() != labeled.dims()) {
        throw WidthMismatchError("run_sshmc_bli: unlabeled feature width mismatch");
    }
    if (config.k < 2) throw Error("run_sshmc_bli: k must be >= 2");

    const std::size_t n_labeled = labeled.rows();
    const std::size_t n_unlabeled = unlabeled_features.rows();
    const std::size_t n_labels = labeled.hierarchy->size();

    // The current pool: labeled rows first, then the currently valid
    // pseudo-labeled rows. pool_of_unlabeled[j] is j's pool slot, if any.
    Matrix pool_features = labeled.features;
    std::vector<LabelVector> pool_labels = labeled.labels;
    std::vector<std::size_t> pool_of_unlabeled(n_unlabeled, static_cast<std::size_t>(-1));
    std::vector<std::size_t> pool_rows_from_unlabeled;

    std::vector<PseudoLabel> state(n_unlabeled);
    std::vector<PseudoLabel> previous(n_unlabeled);
    for (auto& p : previous) p.bits.assign(n_labels, 0);

    SshmcResult result;
    int k_current = config.k;
    int iteration = 1;
    while (true) {
        const std::size_t pool_size = pool_features.rows();
        parallel_for(n_unlabeled, [&](std::size_t j) {
            std::optional<std::size_t> exclude;
            if (config.variant == Variant::kV2 &&
                pool_of_unlabeled[j] != static_cast<std::size_t>(-1)) {
                exclude = pool_of_unlabeled[j];
            }
            PseudoLabel& pl = state[j];
            pl.neighbors = nearest_labeled_neighbors(k_current, unlabeled_features.row(j),
                                                     pool_features, exclude);
            std::vector<const LabelVector*> rows;
            rows.reserve(pl.neighbors.size());
            for (std::size_t id : pl.neighbors) rows.push_back(&pool_labels[id]);
            PseudoLabelBuild build = build_pseudo_label(rows, config.t2label);
            pl.bits = std::move(build.psl);
            pl.valid = build.valid;
            if (pl.valid) {
                const double s =
                    sisi(unlabeled_features.row(j), pool_features, pl.neighbors, config.sisi_n);
                if (s < config.thr) {
                    pl.valid = false;
                    pl.bits.assign(n_labels, 0);
                }
            }
        });

        IterationRecord record;
        record.iteration = iteration;
        record.pool_size = pool_size;
        record.current_k = k_current;
        for (std::size_t j = 0; j < n_unlabeled; ++j) {
            record.n_valid += state[j].valid ? 1 : 0;
            if (state[j].valid != previous[j].valid || state[j].bits != previous[j].bits) {
                ++record.n_changed;
            }
        }
        result.log.push_back(record);

        if (iteration > config.max_iterations || same_pseudo_labels(state, previous)) break;
        previous = state;

        pool_rows_from_unlabeled.clear();
        std::fill(pool_of_unlabeled.begin(), pool_of_unlabeled.end(), static_cast<std::size_t>(-1));
        for (std::size_t j = 0; j < n_unlabeled; ++j) {
            if (state[j].valid) pool_rows_from_unlabeled.push_back(j);
        }
        pool_features = Matrix(n_labeled + pool_rows_from_unlabeled.size(), labeled.dims());
        pool_labels.assign(n_labeled, {});
        for (std::size_t r = 0; r < n_labeled; ++r) {
            for (std::size_t c = 0; c < labeled.dims(); ++c) {
                pool_features(r, c) = labeled.features(r, c);
            }
            pool_labels[r] = labeled.labels[r];
        }
        for (std::size_t i = 0; i < pool_rows_from_unlabeled.size(); ++i) {
            const std::size_t j = pool_rows_from_unlabeled[i];
            const std::size_t r = n_labeled + i;
            for (std::size_t c = 0; c < labeled.dims(); ++c) {
                pool_features(r, c) = unlabeled_features(j, c);
            }
            pool_labels.push_back(state[j].bits);
            pool_of_unlabeled[j] = r;
        }

        if (config.variant == Variant::kV3 && config.k_step_iters > 0 &&
            iteration % config.k_step_iters == 0) {
            const int cap = static_cast<int>(pool_features.rows()) - 1;
            k_current = std::min(k_current + 1, std::max(config.k, cap));
        }
        ++iteration;
    }

    // Train on the pool the loop converged with; a fixed point means the last
    // update would not have changed it.
    Dataset final_pool;
    final_pool.hierarchy = labeled.hierarchy;
    final_pool.features = std::move(pool_features);
    final_pool.labels = std::move(pool_labels);
    result.model = fit_lcn(final_pool, policy, base);
    result.final_state = std::move(state);
    return result;
}

void write_iteration_log_csv(std::ostream& out, const std::vector<IterationRecord>& log) {
    out << "iteration,pool_size,n_valid,n_changed,current_k\n";
    for (const auto& rec : log) {
        out << rec.iteration << ',' << rec.pool_size << ',' << rec.n_valid << ',' << rec.n_changed
            << ',' << rec.current_k << '\n';
    }
}

}  // namespace sshmc
