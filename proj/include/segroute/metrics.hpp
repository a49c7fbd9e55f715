#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segroute/volume.hpp"

namespace segroute {

/// 2|A n B| / (|A| + |B|). Throws GeometryError on dim mismatch and
/// UndefinedMetricError when both masks are empty.
double dice(const Volume& a, const Volume& b);

/// Mann-Whitney estimate of the ROC AUC: the fraction of (positive, negative)
/// pairs where the positive scores higher, ties counting 1/2.
/// labels[n] is true for the positive class.
double roc_auc(std::span<const double> scores, std::span<const bool> labels);
double roc_auc(std::span<const double> scores, const std::vector<bool>& labels);

/// Binary confusion counts relative to a designated positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    /// Same matrix seen from the other class.
    ConfusionCounts swapped() const { return {tn, fn, fp, tp}; }
};

struct ClassMetrics {
    double precision = 0.0;
    double sensitivity = 0.0;
    double f1 = 0.0;
};

struct ClassificationReport {
    double accuracy = 0.0;
    std::map<std::string, ClassMetrics> per_class;
    double macro_f1 = 0.0;
    std::optional<double> auc;
};

/// Precision, sensitivity and F1 of the positive class of `counts`.
/// `label` only names the class in error messages.
ClassMetrics class_metrics(const ConfusionCounts& counts, const std::string& label);
double accuracy(const ConfusionCounts& counts);

/// Accuracy, per-class precision / sensitivity / F1 and their unweighted
/// (macro) F1 mean. Throws UndefinedMetricError naming the field whose
/// denominator is zero.
ClassificationReport classification_report(const ConfusionCounts& counts, const std::string& positive,
                                           const std::string& negative, std::optional<double> auc = std::nullopt);

} // namespace segroute
