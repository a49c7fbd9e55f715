#include "segroute/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "segroute/error.hpp"

namespace segroute {

namespace {

double mean_of(std::span<const double> v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

std::vector<double> signed_rank_counts(std::size_t n)
{
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> counts(max_sum + 1, 0.0);
    counts[0] = 1.0;
    // Add rank r to the subsets built from ranks 1..r-1.
    for (std::size_t r = 1; r <= n; ++r) {
        const std::size_t reach = r * (r + 1) / 2;
        for (std::size_t s = reach; s >= r; --s)
            counts[s] += counts[s - r];
    }
    return counts;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

PairedTestResult wilcoxon_signed_rank(const PairedSample& s, double alpha)
{
    if (s.x.size() != s.y.size())
        throw ValidationError("paired sample: x and y differ in length");
    if (s.x.empty())
        throw ValidationError("paired sample is empty");
    if (!s.ids.empty()) {
        if (s.ids.size() != s.x.size())
            throw ValidationError("paired sample: ids not parallel to values");
        if (std::set<std::string>(s.ids.begin(), s.ids.end()).size() != s.ids.size())
            throw ValidationError("paired sample: duplicate ids");
    }

    PairedTestResult r;
    r.alpha = alpha;
    r.mean_x = mean_of(s.x);
    r.mean_y = mean_of(s.y);

    std::vector<double> d;
    for (std::size_t n = 0; n < s.x.size(); ++n) {
        double diff = s.x[n] - s.y[n];
        if (diff != 0.0)
            d.push_back(diff);
    }
    const std::size_t n = d.size();
    if (n == 0)
        throw DegenerateSampleError("no nonzero differences");
    r.n_effective = n;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

    double w_plus = 0.0;
    double tie_term = 0.0; // sum of t^3 - t over tie groups
    bool has_ties = false;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && std::abs(d[order[end]]) == std::abs(d[order[start]]))
            ++end;
        const double t = static_cast<double>(end - start);
        const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
        if (end - start > 1) {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        for (std::size_t q = start; q < end; ++q)
            if (d[order[q]] > 0.0)
                w_plus += rank;
        start = end;
    }
    const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    r.w_plus = w_plus;
    r.w_statistic = std::min(w_plus, total - w_plus);

    if (n <= kExactThreshold && !has_ties) {
        r.method = TestMethod::Exact;
        auto counts = signed_rank_counts(n);
        const auto w = static_cast<std::size_t>(std::llround(w_plus));
        double lower = 0.0, upper = 0.0;
        for (std::size_t v = 0; v < counts.size(); ++v) {
            if (v <= w)
                lower += counts[v];
            if (v >= w)
                upper += counts[v];
        }
        const double outcomes = std::ldexp(1.0, static_cast<int>(n));
        r.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper) / outcomes);
    } else {
        r.method = TestMethod::NormalApprox;
        const double nn = static_cast<double>(n);
        const double mu = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double z = (w_plus - mu) / std::sqrt(var);
        r.p_two_sided = std::min(1.0, std::erfc(std::abs(z) / std::numbers::sqrt2));
    }
    return r;
}

ComparisonReport compare_methods(std::span<const ScoredItem> a, std::span<const ScoredItem> b,
                                 const std::function<std::string(const std::string&)>& group_of, double alpha)
{
    auto index = [](std::span<const ScoredItem> items, const char* side) {
        std::map<std::string, double> m;
        for (const auto& it : items)
            if (!m.emplace(it.id, it.value).second)
                throw PairingError(fmt::format("duplicate id '{}' in {}", it.id, side));
        return m;
    };
    const auto ma = index(a, "a");
    const auto mb = index(b, "b");
    for (const auto& [id, v] : ma)
        if (!mb.contains(id))
            throw PairingError(fmt::format("id '{}' present in a but not in b", id));
    for (const auto& [id, v] : mb)
        if (!ma.contains(id))
            throw PairingError(fmt::format("id '{}' present in b but not in a", id));

    // std::map iteration keeps every group sorted by id.
    std::map<std::string, PairedSample> groups;
    PairedSample all;
    for (const auto& [id, va] : ma) {
        const double vb = mb.at(id);
        for (PairedSample* g : {&all, &groups[group_of(id)]}) {
            g->x.push_back(va);
            g->y.push_back(vb);
            g->ids.push_back(id);
        }
    }

    auto make_row = [alpha](const std::string& name, const PairedSample& s) {
        ComparisonRow row;
        row.group = name;
        row.n = s.x.size();
        row.mean_a = mean_of(s.x);
        row.mean_b = mean_of(s.y);
        try {
            row.test = wilcoxon_signed_rank(s, alpha);
        } catch (const DegenerateSampleError& e) {
            row.error = e.what();
        }
        return row;
    };

    ComparisonReport report;
    report.alpha = alpha;
    if (all.x.empty())
        return report;
    report.rows.push_back(make_row("all", all));
    for (const auto& [name, s] : groups)
        report.rows.push_back(make_row(name, s));
    return report;
}

std::string to_csv(const ComparisonReport& report)
{
    std::string out = "group,n,mean_a,mean_b,w,p,method,significant\n";
    for (const auto& row : report.rows) {
        if (row.test) {
            const auto& t = *row.test;
            out += fmt::format("{},{},{:.6f},{:.6f},{:.1f},{:.6e},{},{}\n", row.group, row.n, row.mean_a, row.mean_b,
                               t.w_statistic, t.p_two_sided, t.method == TestMethod::Exact ? "exact" : "normal-approx",
                               t.significant() ? "true" : "false");
        } else {
            out += fmt::format("{},{},{:.6f},{:.6f},,,{},false\n", row.group, row.n, row.mean_a, row.mean_b, row.error);
        }
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        throw ValidationError("quantile of empty data");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size())
        return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BoxplotSummary boxplot_summary(std::span<const double> values)
{
    if (values.empty())
        throw ValidationError("boxplot of empty data");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    BoxplotSummary b;
    b.n = v.size();
    b.mean = mean_of(values);
    b.min = v.front();
    b.max = v.back();
    b.q1 = quantile_sorted(v, 0.25);
    b.median = quantile_sorted(v, 0.5);
    b.q3 = quantile_sorted(v, 0.75);
    const double iqr = b.q3 - b.q1;
    for (double x : v)
        if (x < b.q1 - 1.5 * iqr || x > b.q3 + 1.5 * iqr)
            b.outliers.push_back(x);
    return b;
}

} // namespace segroute
