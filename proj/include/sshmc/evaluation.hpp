#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sshmc/matrix.hpp"

namespace sshmc {

struct MicroPR {
    double precision = 0.0;
    double recall = 0.0;
};

// Micro-averaged precision/recall at threshold t: predictions binarized at
// >= t, true/false positives pooled over every label and row. Empty pools
// follow the P=1 (no predicted positives) and R=1 (no actual positives)
// conventions.
MicroPR micro_pr_at_threshold(const Matrix& pred, const std::vector<LabelVector>& truth,
                              double t);

// Area under the micro precision-recall step curve, accumulated over the
// descending distinct prediction scores. Throws EmptyTruthError when the
// truth has no positive cell.
double average_precision(const Matrix& pred, const std::vector<LabelVector>& truth);

struct RankTable {
    Matrix ranks;                      // datasets x algorithms, 1 = best
    std::vector<double> average_ranks;
    std::size_t datasets() const { return ranks.rows(); }
    std::size_t algorithms() const { return ranks.cols(); }
};

// Per-dataset ranks with average rank on ties.
RankTable rank_matrix(const Matrix& values, bool higher_is_better);

struct FriedmanResult {
    double chi2 = 0.0;            // Friedman chi-squared statistic
    double f_stat = 0.0;          // Iman-Davenport correction
    double critical_value = 0.0;  // F distribution at (l-1, (l-1)(M-1))
    bool reject = false;
};

// Friedman test over a rank table; the decision uses the Iman-Davenport F
// statistic. A perfectly consistent ranking drives the F statistic to
// infinity and rejects.
FriedmanResult friedman_test(const RankTable& table, double alpha);

// Nemenyi critical difference for l algorithms over M datasets at alpha in
// {0.05, 0.10}; the studentized-range constants cover l in [2, 10].
double nemenyi_cd(std::size_t algorithms, std::size_t datasets, double alpha);

struct ComparisonReport {
    std::vector<std::string> algorithms;
    RankTable table;
    FriedmanResult friedman;
    double alpha = 0.05;
    double critical_difference = 0.0;  // set when the null hypothesis is rejected
};

ComparisonReport compare_algorithms(const Matrix& values,
                                    const std::vector<std::string>& algorithm_names,
                                    bool higher_is_better, double alpha);

// CSV: algorithm,average_rank,critical_difference
void write_rank_csv(std::ostream& out, const ComparisonReport& report);
void write_report_text(std::ostream& out, const ComparisonReport& report);

}  // namespace sshmc
