#include <set>

#include <gtest/gtest.h>

#include "segroute/error.hpp"
#include "segroute/kernels.hpp"
#include "segroute/occlusion.hpp"
#include "test_support.hpp"

using namespace segroute;

namespace {

/// p(PLD) = 1 while the probe voxel holds its original value, else 0.
class ProbeClassifier final : public Classifier {
public:
    ProbeClassifier(VoxelIndex probe, float value) : probe_(probe), value_(value) {}
    ClassScores classify(const Volume& v, std::string_view = {}) const override
    {
        bool intact = v.real()[v.index(probe_.i, probe_.j, probe_.k)] == value_;
        return ClassScores::binary("MCC", "PLD", intact ? 1.0 : 0.0);
    }
    std::vector<ClassLabel> labels() const override { return {"MCC", "PLD"}; }

private:
    VoxelIndex probe_;
    float value_;
};

/// p(PLD) = mean intensity; smooth, so every patch matters.
class MeanClassifier final : public Classifier {
public:
    ClassScores classify(const Volume& v, std::string_view = {}) const override
    {
        double s = 0.0;
        for (float x : v.real())
            s += x;
        return ClassScores::binary("MCC", "PLD", s / static_cast<double>(v.size()));
    }
    std::vector<ClassLabel> labels() const override { return {"MCC", "PLD"}; }
};

bool covers(const VoxelIndex& a, const VoxelIndex& q, const Dims& patch)
{
    return q.i >= a.i && q.i < a.i + patch[0] && q.j >= a.j && q.j < a.j + patch[1] && q.k >= a.k &&
           q.k < a.k + patch[2];
}

} // namespace

TEST(OcclusionAnchors, GridAndTail)
{
    EXPECT_EQ(occlusion_anchors(8, 4, 4), (std::vector<std::size_t>{0, 4}));
    EXPECT_EQ(occlusion_anchors(10, 4, 4), (std::vector<std::size_t>{0, 4, 6}));
    EXPECT_EQ(occlusion_anchors(4, 4, 1), (std::vector<std::size_t>{0}));
    EXPECT_EQ(occlusion_anchors(5, 2, 3), (std::vector<std::size_t>{0, 3}));
    EXPECT_THROW(occlusion_anchors(4, 5, 1), ValidationError);
    EXPECT_THROW(occlusion_anchors(4, 2, 0), ValidationError);
    EXPECT_THROW(occlusion_anchors(4, 0, 1), ValidationError);
}

TEST(Occlusion, ConstantClassifierGivesZeroMap)
{
    Rng rng(1);
    Volume v = segroute::testing::random_real(rng, {8, 8, 8});
    FixedClassifier c(ClassScores::binary("MCC", "PLD", 0.3));
    auto r = occlusion_map(c, v, {{4, 4, 4}, {2, 2, 2}, 0.0, "PLD"});
    for (float x : r.map.real())
        EXPECT_EQ(x, 0.0f);
    EXPECT_EQ(r.map.geometry(), v.geometry());
}

TEST(Occlusion, ProbeIsFoundExactly)
{
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        Volume::RealData data(512);
        for (auto& x : data)
            x = static_cast<float>(rng.uniform(0.1, 1.0));
        Volume v(segroute::testing::geometry({8, 8, 8}), data);
        VoxelIndex probe{static_cast<std::size_t>(rng.integer(0, 7)), static_cast<std::size_t>(rng.integer(0, 7)),
                         static_cast<std::size_t>(rng.integer(0, 7))};
        ProbeClassifier c(probe, data[v.index(probe.i, probe.j, probe.k)]);
        OcclusionSpec spec{{4, 4, 4}, {4, 4, 4}, 0.0, "PLD"};
        auto r = occlusion_map(c, v, spec);

        ASSERT_EQ(r.anchors.size(), 8u);
        for (const auto& a : r.anchors)
            EXPECT_EQ(a.delta, covers(a.anchor, probe, spec.patch) ? 1.0 : 0.0);

        // Non-overlapping patches: the positive region is exactly the probe's patch.
        std::set<std::size_t> positive, expected;
        for (std::size_t n = 0; n < r.map.size(); ++n)
            if (r.map.real()[n] > 0.0f)
                positive.insert(n);
        for (std::size_t k = 0; k < 8; ++k)
            for (std::size_t j = 0; j < 8; ++j)
                for (std::size_t i = 0; i < 8; ++i)
                    if (i / 4 == probe.i / 4 && j / 4 == probe.j / 4 && k / 4 == probe.k / 4)
                        expected.insert(v.index(i, j, k));
        EXPECT_EQ(positive, expected);
    }
}

TEST(Occlusion, OverlappingPatchesAverage)
{
    Volume v = segroute::testing::real_from({6, 1, 1}, {1, 1, 1, 1, 1, 1});
    MeanClassifier c;
    auto r = occlusion_map(c, v, {{2, 1, 1}, {2, 1, 1}, 0.0, "PLD"});
    ASSERT_EQ(r.anchors.size(), 3u);
    for (const auto& a : r.anchors)
        EXPECT_NEAR(a.delta, 2.0 / 6.0, 1e-12);
    for (float x : r.map.real())
        EXPECT_NEAR(x, 2.0 / 6.0, 1e-6);

    auto overlap = occlusion_map(c, v, {{3, 1, 1}, {1, 1, 1}, 0.0, "PLD"});
    EXPECT_EQ(overlap.anchors.size(), 4u);
    for (float x : overlap.map.real())
        EXPECT_NEAR(x, 0.5, 1e-6);
}

TEST(Occlusion, ParallelMatchesSerialAndIsDeterministic)
{
    Rng rng(3);
    Volume v = segroute::testing::random_real(rng, {9, 7, 5});
    MeanClassifier c;
    OcclusionSpec spec{{3, 3, 2}, {2, 2, 2}, 0.0, "PLD"};
    auto serial = occlusion_map(c, v, spec, false);
    for (int threads : {1, 2, 4}) {
        kernels::set_thread_count(threads);
        auto parallel = occlusion_map(c, v, spec, true);
        EXPECT_EQ(parallel.map, serial.map);
        EXPECT_EQ(occlusion_csv(parallel), occlusion_csv(serial));
    }
    kernels::set_thread_count(0);
}

TEST(Occlusion, CsvAndErrors)
{
    Volume v = segroute::testing::real_from({2, 1, 1}, {1, 1});
    MeanClassifier c;
    auto r = occlusion_map(c, v, {{1, 1, 1}, {1, 1, 1}, 0.0, "PLD"});
    EXPECT_EQ(occlusion_csv(r), "anchor_i,anchor_j,anchor_k,delta\n0,0,0,0.5\n1,0,0,0.5\n");
    EXPECT_THROW(occlusion_map(c, v, {{1, 1, 1}, {1, 1, 1}, 0.0, "XYZ"}), ValidationError);
    EXPECT_THROW(occlusion_map(c, Volume(segroute::testing::geometry({1, 1, 1}), Volume::HuData{0}),
                               {{1, 1, 1}, {1, 1, 1}, 0.0, "PLD"}),
                 PayloadTypeError);
}
