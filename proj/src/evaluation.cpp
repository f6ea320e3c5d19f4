#include "sshmc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/fisher_f.hpp>

#include "sshmc/errors.hpp"

namespace sshmc {

namespace {

void check_shapes(const Matrix& pred, const std::vector<LabelVector>& truth) {
    if (pred.rows() != truth.size()) {
        throw ShapeMismatchError("evaluation: " + std::to_string(pred.rows()) +
                                 " prediction rows vs " + std::to_string(truth.size()) +
                                 " truth rows");
    }
    for (const auto& row : truth) {
        if (row.size() != pred.cols()) {
            throw ShapeMismatchError("evaluation: truth row length " +
                                     std::to_string(row.size()) + " vs " +
                                     std::to_string(pred.cols()) + " labels");
        }
    }
}

}  // namespace

MicroPR micro_pr_at_threshold(const Matrix& pred, const std::vector<LabelVector>& truth,
                              double t) {
    check_shapes(pred, truth);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t l = 0; l < pred.cols(); ++l) {
            const bool predicted = pred(r, l) >= t;
            const bool actual = truth[r][l] != 0;
            if (predicted && actual) {
                ++tp;
            } else if (predicted) {
                ++fp;
            } else if (actual) {
                ++fn;
            }
        }
    }
    MicroPR out;
    out.precision = (tp + fp == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.recall = (tp + fn == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return out;
}

double average_precision(const Matrix& pred, const std::vector<LabelVector>& truth) {
    check_shapes(pred, truth);
    std::size_t total_pos = 0;
    for (const auto& row : truth) {
        for (std::uint8_t bit : row) total_pos += bit;
    }
    if (total_pos == 0) throw EmptyTruthError("average_precision: truth has no positive cell");

    std::vector<std::pair<double, std::uint8_t>> cells;
    cells.reserve(pred.rows() * pred.cols());
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t l = 0; l < pred.cols(); ++l) {
            cells.emplace_back(pred(r, l), truth[r][l]);
        }
    }
    std::sort(cells.begin(), cells.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    // Walk the descending distinct scores; each one is a threshold of the
    // step curve.
    double ap = 0.0;
    double recall_prev = 0.0;
    std::size_t tp = 0;
    std::size_t predicted = 0;
    std::size_t i = 0;
    while (i < cells.size()) {
        const double score = cells[i].first;
        while (i < cells.size() && cells[i].first == score) {
            tp += cells[i].second;
            ++predicted;
            ++i;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
    }
    return ap;
}

RankTable rank_matrix(const Matrix& values, bool higher_is_better) {
    RankTable table;
    const std::size_t m = values.rows();
    const std::size_t l = values.cols();
    table.ranks = Matrix(m, l);
    table.average_ranks.assign(l, 0.0);
    std::vector<std::size_t> order(l);
    for (std::size_t r = 0; r < m; ++r) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = values(r, a);
            const double vb = values(r, b);
            if (va != vb) return higher_is_better ? va > vb : va < vb;
            return a < b;
        });
        std::size_t i = 0;
        while (i < l) {
            std::size_t j = i;
            while (j + 1 < l && values(r, order[j + 1]) == values(r, order[i])) ++j;
            const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) table.ranks(r, order[t]) = shared;
            i = j + 1;
        }
        for (std::size_t a = 0; a < l; ++a) table.average_ranks[a] += table.ranks(r, a);
    }
    for (auto& rank : table.average_ranks) rank /= static_cast<double>(m);
    return table;
}

FriedmanResult friedman_test(const RankTable& table, double alpha) {
    const std::size_t m = table.datasets();
    const std::size_t l = table.algorithms();
    if (m < 2 || l < 2) {
        throw DegenerateError("friedman_test: need at least 2 datasets and 2 algorithms");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw UnsupportedAlphaError("friedman_test: alpha must be in (0, 1)");
    }
    const double md = static_cast<double>(m);
    const double ld = static_cast<double>(l);
    double sum_sq = 0.0;
    for (double rank : table.average_ranks) sum_sq += rank * rank;

    FriedmanResult result;
    result.chi2 = 12.0 * md / (ld * (ld + 1.0)) * (sum_sq - ld * (ld + 1.0) * (ld + 1.0) / 4.0);
    if (result.chi2 < 0.0 && result.chi2 > -1e-12) result.chi2 = 0.0;

    const double denom = md * (ld - 1.0) - result.chi2;
    result.f_stat = denom <= 0.0 ? std::numeric_limits<double>::infinity()
                                 : (md - 1.0) * result.chi2 / denom;

    const boost::math::fisher_f_distribution<double> f_dist(ld - 1.0, (ld - 1.0) * (md - 1.0));
    result.critical_value = boost::math::quantile(f_dist, 1.0 - alpha);
    result.reject = result.f_stat > result.critical_value;
    return result;
}

double nemenyi_cd(std::size_t algorithms, std::size_t datasets, double alpha) {
    // Two-tailed studentized-range constants divided by sqrt(2), for 2..10
    // algorithms.
    static constexpr double kQ05[] = {1.960, 2.343, 2.569, 2.728, 2.850,
                                      2.949, 3.031, 3.102, 3.164};
    static constexpr double kQ10[] = {1.645, 2.052, 2.291, 2.459, 2.589,
                                      2.693, 2.780, 2.855, 2.920};
    if (algorithms < 2 || algorithms > 10) {
        throw UnsupportedAlphaError("nemenyi_cd: constants cover 2..10 algorithms, got " +
                                    std::to_string(algorithms));
    }
    if (datasets < 1) throw DegenerateError("nemenyi_cd: need at least 1 dataset");
    const double* q = nullptr;
    if (alpha == 0.05) {
        q = kQ05;
    } else if (alpha == 0.10) {
        q = kQ10;
    } else {
        throw UnsupportedAlphaError("nemenyi_cd: alpha must be 0.05 or 0.10");
    }
    const double l = static_cast<double>(algorithms);
    const double m = static_cast<double>(datasets);
    return q[algorithms - 2] * std::sqrt(l * (l + 1.0) / (6.0 * m));
}

ComparisonReport compare_algorithms(const Matrix& values,
                                    const std::vector<std::string>& algorithm_names,
                                    bool higher_is_better, double alpha) {
    if (algorithm_names.size() != values.cols()) {
        throw ShapeMismatchError("compare_algorithms: name count mismatch");
    }
    ComparisonReport report;
    report.algorithms = algorithm_names;
    report.alpha = alpha;
    report.table = rank_matrix(values, higher_is_better);
    report.friedman = friedman_test(report.table, alpha);
    if (report.friedman.reject) {
        report.critical_difference = nemenyi_cd(values.cols(), values.rows(), alpha);
    }
    return report;
}

void write_rank_csv(std::ostream& out, const ComparisonReport& report) {
    out << "algorithm,average_rank,critical_difference\n";
    for (std::size_t a = 0; a < report.algorithms.size(); ++a) {
        out << report.algorithms[a] << ',' << report.table.average_ranks[a] << ','
            << report.critical_difference << '\n';
    }
}

void write_report_text(std::ostream& out, const ComparisonReport& report) {
    out << "Algorithm comparison over " << report.table.datasets() << " blocks, "
        << report.table.algorithms() << " algorithms (1 = best)\n";
    for (std::size_t a = 0; a < report.algorithms.size(); ++a) {
        out << "  " << report.algorithms[a] << ": average rank " << report.table.average_ranks[a]
            << "\n";
    }
    out << "Friedman chi2 = " << report.friedman.chi2 << ", F = " << report.friedman.f_stat
        << ", critical value at alpha " << report.alpha << " = "
        << report.friedman.critical_value << "\n";
    if (report.friedman.reject) {
        out << "Null hypothesis rejected; Nemenyi critical difference = "
            << report.critical_difference << "\n";
    } else {
        out << "Null hypothesis not rejected.\n";
    }
}

}  // namespace sshmc
