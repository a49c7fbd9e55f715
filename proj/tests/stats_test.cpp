#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "segroute/error.hpp"
#include "segroute/stats.hpp"
#include "test_support.hpp"

using namespace segroute;

namespace {

PairedSample from_differences(const std::vector<double>& d)
{
    PairedSample s;
    for (double x : d) {
        s.x.push_back(x);
        s.y.push_back(0.0);
    }
    return s;
}

/// Two-sided exact p by listing every sign assignment of the ranks of a
/// tie-free, zero-free difference vector.
double brute_force_p(const std::vector<double>& d)
{
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
    double observed = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        if (d[order[r]] > 0)
            observed += static_cast<double>(r + 1);
    double le = 0.0, ge = 0.0;
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            if (mask >> r & 1)
                w += static_cast<double>(r + 1);
        le += w <= observed;
        ge += w >= observed;
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / static_cast<double>(patterns));
}

std::vector<double> tie_free_differences(Rng& rng, std::size_t n)
{
    // Distinct magnitudes drawn from a shuffled grid, random signs.
    std::vector<double> mags(40);
    std::iota(mags.begin(), mags.end(), 1.0);
    for (std::size_t x = mags.size() - 1; x > 0; --x)
        std::swap(mags[x], mags[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(x)))]);
    std::vector<double> d(n);
    for (std::size_t x = 0; x < n; ++x)
        d[x] = (rng.coin() ? 1.0 : -1.0) * mags[x] * 0.01;
    return d;
}

} // namespace

TEST(Wilcoxon, SameSignExactValues)
{
    auto seven = wilcoxon_signed_rank(from_differences({0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07}));
    EXPECT_EQ(seven.method, TestMethod::Exact);
    EXPECT_EQ(seven.p_two_sided, 0.015625);
    EXPECT_EQ(seven.w_statistic, 0.0);
    auto four = wilcoxon_signed_rank(from_differences({-0.4, -0.1, -0.3, -0.2}));
    EXPECT_EQ(four.p_two_sided, 0.125);
    EXPECT_EQ(four.w_plus, 0.0);
}

TEST(Wilcoxon, HandEnumeratedThreePairs)
{
    auto r = wilcoxon_signed_rank(from_differences({1, -2, 3}));
    EXPECT_EQ(r.w_plus, 4.0);
    EXPECT_EQ(r.w_statistic, 2.0);
    EXPECT_DOUBLE_EQ(r.p_two_sided, 0.75);
}

TEST(Wilcoxon, SinglePairGivesOne)
{
    auto r = wilcoxon_signed_rank(from_differences({0.3}));
    EXPECT_EQ(r.p_two_sided, 1.0);
    EXPECT_EQ(r.n_effective, 1u);
}

TEST(Wilcoxon, ExactMatchesBruteForce)
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        auto n = static_cast<std::size_t>(rng.integer(1, 12));
        auto d = tie_free_differences(rng, n);
        auto r = wilcoxon_signed_rank(from_differences(d));
        ASSERT_EQ(r.method, TestMethod::Exact);
        EXPECT_NEAR(r.p_two_sided, brute_force_p(d), 1e-12);
    }
}

TEST(Wilcoxon, CountsSumToPowerOfTwo)
{
    for (std::size_t n : {0u, 1u, 5u, 20u, 25u, 40u}) {
        auto c = signed_rank_counts(n);
        EXPECT_EQ(c.size(), n * (n + 1) / 2 + 1);
        EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0.0), std::ldexp(1.0, static_cast<int>(n)));
        for (std::size_t s = 0; s < c.size(); ++s)
            EXPECT_EQ(c[s], c[c.size() - 1 - s]);
    }
}

TEST(Wilcoxon, ZeroDifferencesAreDiscarded)
{
    auto r = wilcoxon_signed_rank(from_differences({0, 0, 1.5, -2, 3, 0.25}));
    EXPECT_EQ(r.n_effective, 4u);
    EXPECT_EQ(r.w_statistic, 3.0);
    EXPECT_DOUBLE_EQ(r.p_two_sided, 0.625); // scipy, zero_method="wilcox"
    EXPECT_THROW(wilcoxon_signed_rank(from_differences({0, 0, 0})), DegenerateSampleError);
}

TEST(Wilcoxon, ScipyReferenceValues)
{
    auto exact = wilcoxon_signed_rank(from_differences({0.5, -1.25, 2.0, 3.5, -0.75, 4.0, 6.0, -2.5, 7.0, 8.5}));
    EXPECT_EQ(exact.method, TestMethod::Exact);
    EXPECT_EQ(exact.w_statistic, 10.0);
    EXPECT_NEAR(exact.p_two_sided, 0.083984375, 1e-15);

    // Tied magnitudes force the normal approximation with tie correction.
    auto ties = wilcoxon_signed_rank(from_differences({1, 1, 2, -3, 4, 4, 5, -6, 7, 8}));
    EXPECT_EQ(ties.method, TestMethod::NormalApprox);
    EXPECT_EQ(ties.w_statistic, 12.0);
    EXPECT_NEAR(ties.p_two_sided, 0.11365821697739432, 1e-12);

    std::vector<double> d30;
    for (int k = 1; k <= 30; ++k)
        d30.push_back((k % 3 == 0 ? -1.0 : 1.0) * k * 0.1);
    auto large = wilcoxon_signed_rank(from_differences(d30));
    EXPECT_EQ(large.method, TestMethod::NormalApprox);
    EXPECT_EQ(large.w_statistic, 165.0);
    EXPECT_NEAR(large.p_two_sided, 0.1650265656246961, 1e-12);
}

TEST(Wilcoxon, SymmetryScaleAndOrderInvariance)
{
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        PairedSample s;
        auto n = static_cast<std::size_t>(rng.integer(2, 30));
        for (std::size_t x = 0; x < n; ++x) {
            s.x.push_back(rng.uniform());
            s.y.push_back(rng.uniform());
        }
        auto base = wilcoxon_signed_rank(s);
        PairedSample swapped{s.y, s.x, {}};
        EXPECT_NEAR(wilcoxon_signed_rank(swapped).p_two_sided, base.p_two_sided, 1e-15);

        PairedSample scaled = s;
        for (std::size_t x = 0; x < n; ++x) {
            scaled.x[x] = 4.0 * s.x[x];
            scaled.y[x] = 4.0 * s.y[x];
        }
        auto sc = wilcoxon_signed_rank(scaled);
        EXPECT_EQ(sc.w_statistic, base.w_statistic);
        EXPECT_NEAR(sc.p_two_sided, base.p_two_sided, 1e-15);

        PairedSample reversed{{s.x.rbegin(), s.x.rend()}, {s.y.rbegin(), s.y.rend()}, {}};
        auto rv = wilcoxon_signed_rank(reversed);
        EXPECT_EQ(rv.w_statistic, base.w_statistic);
        EXPECT_EQ(rv.p_two_sided, base.p_two_sided);
    }
}

TEST(Wilcoxon, RejectsMalformedSamples)
{
    EXPECT_THROW(wilcoxon_signed_rank(PairedSample{{1.0}, {1.0, 2.0}, {}}), ValidationError);
    EXPECT_THROW(wilcoxon_signed_rank(PairedSample{{}, {}, {}}), ValidationError);
    EXPECT_THROW(wilcoxon_signed_rank(PairedSample{{1.0, 2.0}, {0.0, 0.0}, {"a", "a"}}), ValidationError);
}

TEST(NormalCdf, KnownValues)
{
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
    EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316300946, 1e-15);
}

TEST(CompareMethods, GroupsAndOrdering)
{
    std::vector<ScoredItem> a{{"s3", 0.9}, {"s1", 0.8}, {"s2", 0.7}, {"s4", 0.95}};
    std::vector<ScoredItem> b{{"s1", 0.7}, {"s2", 0.75}, {"s4", 0.94}, {"s3", 0.9}};
    std::map<std::string, std::string> group{{"s1", "PLD->PLD"}, {"s2", "PLD->PLD"}, {"s3", "MCC->PLD"},
                                             {"s4", "MCC->MCC"}};
    auto report = compare_methods(a, b, [&](const std::string& id) { return group.at(id); });
    ASSERT_EQ(report.rows.size(), 4u);
    EXPECT_EQ(report.rows[0].group, "all");
    EXPECT_EQ(report.rows[0].n, 4u);
    EXPECT_EQ(report.rows[1].group, "MCC->MCC");
    EXPECT_EQ(report.rows[2].group, "MCC->PLD");
    EXPECT_EQ(report.rows[3].group, "PLD->PLD");
    EXPECT_FALSE(report.rows[2].test.has_value());
    EXPECT_EQ(report.rows[2].error, "no nonzero differences");
    ASSERT_TRUE(report.rows[1].test.has_value());
    EXPECT_EQ(report.rows[1].test->p_two_sided, 1.0);
    EXPECT_DOUBLE_EQ(report.rows[3].mean_a, 0.75);

    // Input order does not matter.
    std::reverse(a.begin(), a.end());
    auto again = compare_methods(a, b, [&](const std::string& id) { return group.at(id); });
    EXPECT_EQ(to_csv(again), to_csv(report));
}

TEST(CompareMethods, PairingErrors)
{
    auto all = [](const std::string&) { return std::string("g"); };
    std::vector<ScoredItem> a{{"x", 1.0}, {"y", 2.0}};
    std::vector<ScoredItem> missing{{"x", 1.0}};
    std::vector<ScoredItem> other{{"x", 1.0}, {"z", 2.0}};
    std::vector<ScoredItem> dup{{"x", 1.0}, {"x", 2.0}};
    EXPECT_THROW(compare_methods(a, missing, all), PairingError);
    EXPECT_THROW(compare_methods(a, other, all), PairingError);
    EXPECT_THROW(compare_methods(dup, a, all), PairingError);
}

TEST(CompareMethods, IdenticalInputsAreDegeneratePerGroup)
{
    std::vector<ScoredItem> a{{"x", 1.0}, {"y", 2.0}};
    auto report = compare_methods(a, a, [](const std::string& id) { return id; });
    for (const auto& row : report.rows) {
        EXPECT_FALSE(row.test.has_value());
        EXPECT_EQ(row.error, "no nonzero differences");
    }
    EXPECT_EQ(to_csv(report), "group,n,mean_a,mean_b,w,p,method,significant\n"
                              "all,2,1.500000,1.500000,,,no nonzero differences,false\n"
                              "x,1,1.000000,1.000000,,,no nonzero differences,false\n"
                              "y,1,2.000000,2.000000,,,no nonzero differences,false\n");
}

TEST(CompareMethods, CsvFormatting)
{
    std::vector<ScoredItem> a, b;
    for (int n = 0; n < 7; ++n) {
        a.push_back({"s" + std::to_string(n), 0.9 + 0.001 * (n + 1)});
        b.push_back({"s" + std::to_string(n), 0.9});
    }
    auto report = compare_methods(a, b, [](const std::string&) { return std::string("PLD->MCC"); });
    EXPECT_EQ(to_csv(report), "group,n,mean_a,mean_b,w,p,method,significant\n"
                              "all,7,0.904000,0.900000,0.0,1.562500e-02,exact,true\n"
                              "PLD->MCC,7,0.904000,0.900000,0.0,1.562500e-02,exact,true\n");
}

TEST(Boxplot, QuartilesAndOutliers)
{
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
    auto b = boxplot_summary(v);
    EXPECT_EQ(b.n, 10u);
    EXPECT_DOUBLE_EQ(b.min, 1.0);
    EXPECT_DOUBLE_EQ(b.q1, 3.25); // numpy.percentile(v, 25)
    EXPECT_DOUBLE_EQ(b.median, 5.5);
    EXPECT_DOUBLE_EQ(b.q3, 7.75);
    EXPECT_DOUBLE_EQ(b.max, 100.0);
    EXPECT_DOUBLE_EQ(b.mean, 14.5);
    EXPECT_EQ(b.outliers, std::vector<double>{100.0});
    EXPECT_THROW(boxplot_summary(std::vector<double>{}), ValidationError);
    EXPECT_DOUBLE_EQ(boxplot_summary(std::vector<double>{2.0}).median, 2.0);
}
