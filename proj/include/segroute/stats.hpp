#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segroute {

/// Paired observations, e.g. per-scan Dice of two workflows.
struct PairedSample {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::string> ids; ///< optional; when present must be unique and parallel to x
};

enum class TestMethod { Exact, NormalApprox };

struct PairedTestResult {
    std::size_t n_effective = 0; ///< pairs left after dropping zero differences
    double w_statistic = 0.0;    ///< min(W+, W-)
    double w_plus = 0.0;
    double p_two_sided = 1.0;
    TestMethod method = TestMethod::Exact;
    double mean_x = 0.0;
    double mean_y = 0.0;
    double alpha = 0.05;

    bool significant() const { return p_two_sided < alpha; }
};

inline constexpr std::size_t kExactThreshold = 25;

/// Two-sided Wilcoxon signed-rank test on d = x - y.
///
/// Zero differences are discarded. With at most kExactThreshold remaining
/// pairs and no tied |d| the p-value comes from the exact null distribution
/// of W+ over all 2^n sign assignments; otherwise from the normal
/// approximation with tie-corrected variance and no continuity correction.
/// Throws DegenerateSampleError when every difference is zero.
PairedTestResult wilcoxon_signed_rank(const PairedSample& s, double alpha = 0.05);

/// Number of subsets of {1..n} with each sum s, for s in [0, n(n+1)/2].
/// Counts are exact in double up to n = 52.
std::vector<double> signed_rank_counts(std::size_t n);

/// Standard normal CDF.
double normal_cdf(double z);

/// One scored item for compare_methods.
struct ScoredItem {
    std::string id;
    double value = 0.0;
};

struct ComparisonRow {
    std::string group;
    std::size_t n = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    std::optional<PairedTestResult> test;
    std::string error; ///< set when the group could not be tested
};

struct ComparisonReport {
    double alpha = 0.05;
    std::vector<ComparisonRow> rows; ///< "all" first, then groups in lexicographic order
};

/// Pairs a and b by id and runs the signed-rank test overall and per group.
/// `group_of` maps an id to its category (e.g. "PLD->MCC"). Throws
/// PairingError when a and b do not cover the same ids.
ComparisonReport compare_methods(std::span<const ScoredItem> a, std::span<const ScoredItem> b,
                                 const std::function<std::string(const std::string&)>& group_of,
                                 double alpha = 0.05);

/// CSV with header group,n,mean_a,mean_b,w,p,method,significant.
std::string to_csv(const ComparisonReport& report);

/// Five-number summary plus Tukey outliers (outside 1.5 IQR of the quartiles).
/// Quartiles use linear interpolation between order statistics.
struct BoxplotSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    std::vector<double> outliers;
};

BoxplotSummary boxplot_summary(std::span<const double> values);

/// Linear-interpolation quantile of sorted data, q in [0,1].
double quantile_sorted(std::span<const double> sorted, double q);

} // namespace segroute
