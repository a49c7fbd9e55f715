#include "segroute/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "segroute/error.hpp"

namespace segroute {

double dice(const Volume& a, const Volume& b)
{
    require_same_dims(a, b, "dice");
    auto ma = a.mask();
    auto mb = b.mask();
    std::uint64_t both = 0, na = 0, nb = 0;
    for (std::size_t n = 0; n < ma.size(); ++n) {
        na += ma[n];
        nb += mb[n];
        both += ma[n] & mb[n];
    }
    if (na + nb == 0)
        throw UndefinedMetricError("dice undefined: both masks are empty");
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double roc_auc(std::span<const double> scores, std::span<const bool> labels)
{
    if (scores.size() != labels.size())
        throw ValidationError("roc_auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("roc_auc undefined: need both positive and negative labels");

    // Rank-sum form of the pair count: tied scores share their mean rank,
    // which contributes exactly 1/2 per tied (pos, neg) pair.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });

    // Twice the rank keeps tie midranks integral.
    std::uint64_t pos_rank_sum_x2 = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && scores[order[end]] == scores[order[start]])
            ++end;
        std::uint64_t midrank_x2 = start + 1 + end; // (start+1) + end, both 1-based
        for (std::size_t q = start; q < end; ++q)
            if (labels[order[q]])
                pos_rank_sum_x2 += midrank_x2;
        start = end;
    }
    double u = static_cast<double>(pos_rank_sum_x2) / 2.0 - static_cast<double>(n_pos * (n_pos + 1)) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc(std::span<const double> scores, const std::vector<bool>& labels)
{
    auto flags = std::make_unique<bool[]>(labels.size());
    std::copy(labels.begin(), labels.end(), flags.get());
    return roc_auc(scores, std::span<const bool>(flags.get(), labels.size()));
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const std::string& field)
{
    if (den == 0)
        throw UndefinedMetricError(fmt::format("{} undefined: zero denominator", field));
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

ClassMetrics class_metrics(const ConfusionCounts& c, const std::string& label)
{
    ClassMetrics m;
    m.precision = ratio(c.tp, c.tp + c.fp, label + " precision");
    m.sensitivity = ratio(c.tp, c.tp + c.fn, label + " sensitivity");
    if (m.precision + m.sensitivity == 0.0)
        throw UndefinedMetricError(fmt::format("{} F1 undefined: precision and sensitivity are zero", label));
    m.f1 = 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity);
    return m;
}

double accuracy(const ConfusionCounts& counts) { return ratio(counts.tp + counts.tn, counts.total(), "accuracy"); }

ClassificationReport classification_report(const ConfusionCounts& counts, const std::string& positive,
                                           const std::string& negative, std::optional<double> auc)
{
    ClassificationReport r;
    r.accuracy = accuracy(counts);
    r.per_class[positive] = class_metrics(counts, positive);
    r.per_class[negative] = class_metrics(counts.swapped(), negative);
    r.macro_f1 = (r.per_class[positive].f1 + r.per_class[negative].f1) / 2.0;
    r.auc = auc;
    return r;
}

} // namespace segroute
