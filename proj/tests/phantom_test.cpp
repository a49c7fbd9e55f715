#include <gtest/gtest.h>

#include "segroute/error.hpp"
#include "segroute/kernels.hpp"
#include "segroute/morphology.hpp"
#include "segroute/phantom.hpp"
#include "segroute/svol.hpp"
#include "test_support.hpp"

using namespace segroute;
using segroute::testing::TempDir;

namespace {

PhantomSpec small(PhantomKind kind, std::uint64_t seed)
{
    auto s = PhantomSpec::defaults(kind, seed);
    s.dims = {48, 48, 48};
    s.cyst_count_range = {5, 10};
    s.lesion_count_range = {1, 3};
    return s;
}

double mean_hu_inside(const ScanRecord& r)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t x = 0; x < r.volume.size(); ++x)
        if (r.truth_mask.mask()[x]) {
            sum += r.volume.hu()[x];
            ++n;
        }
    return sum / static_cast<double>(n);
}

} // namespace

TEST(Phantom, DeterministicAndThreadIndependent)
{
    auto spec = small(PhantomKind::PLD, 42);
    kernels::set_thread_count(1);
    auto a = generate_phantom(spec, "x");
    kernels::set_thread_count(4);
    auto b = generate_phantom(spec, "x");
    kernels::set_thread_count(0);
    EXPECT_EQ(svol::encode(a.volume), svol::encode(b.volume));
    EXPECT_EQ(a.truth_mask, b.truth_mask);
    spec.seed = 43;
    EXPECT_NE(generate_phantom(spec, "x").volume, a.volume);
}

TEST(Phantom, StructureAndLabels)
{
    for (auto kind : {PhantomKind::PLD, PhantomKind::MCC}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto spec = small(kind, seed);
            spec.noise_sd = 0.0;
            auto r = generate_phantom(spec, "p");
            EXPECT_EQ(r.true_label, to_string(kind));
            EXPECT_EQ(r.volume.kind(), PayloadKind::HU);
            EXPECT_EQ(r.volume.geometry(), r.truth_mask.geometry());
            EXPECT_EQ(label_components(r.truth_mask).sizes.size(), 1u);

            const auto inclusion = static_cast<std::int16_t>(kind == PhantomKind::PLD ? spec.cyst_hu : spec.lesion_hu);
            std::size_t inclusion_voxels = 0;
            for (std::size_t x = 0; x < r.volume.size(); ++x) {
                const auto hu = r.volume.hu()[x];
                if (r.truth_mask.mask()[x]) {
                    EXPECT_TRUE(hu == inclusion || hu == 60);
                } else {
                    EXPECT_EQ(hu, -1000);
                }
                inclusion_voxels += hu == inclusion;
            }
            EXPECT_GT(inclusion_voxels, 0u);
        }
    }
}

TEST(Phantom, NoInclusionsNoNoise)
{
    auto spec = small(PhantomKind::PLD, 7);
    spec.cyst_count_range = {0, 0};
    spec.noise_sd = 0.0;
    auto r = generate_phantom(spec, "plain");
    for (std::size_t x = 0; x < r.volume.size(); ++x)
        EXPECT_EQ(r.volume.hu()[x], r.truth_mask.mask()[x] ? 60 : -1000);
}

TEST(Phantom, CystsLowerTheMeanHu)
{
    double with = 0.0, without = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto spec = small(PhantomKind::PLD, seed);
        with += mean_hu_inside(generate_phantom(spec, "a"));
        spec.cyst_count_range = {0, 0};
        without += mean_hu_inside(generate_phantom(spec, "b"));
    }
    EXPECT_LT(with, without);
}

TEST(Phantom, Validation)
{
    auto spec = small(PhantomKind::PLD, 0);
    spec.dims = {8, 48, 48};
    EXPECT_THROW(generate_phantom(spec, "x"), ValidationError);
    spec = small(PhantomKind::PLD, 0);
    spec.cyst_count_range = {5, 2};
    EXPECT_THROW(generate_phantom(spec, "x"), ValidationError);
    spec = small(PhantomKind::PLD, 0);
    spec.noise_sd = -1;
    EXPECT_THROW(generate_phantom(spec, "x"), ValidationError);
    spec = small(PhantomKind::PLD, 0);
    spec.cyst_radius_range = {40.0, 50.0};
    spec.cyst_count_range = {1, 1};
    EXPECT_THROW(generate_phantom(spec, "x"), GenerationError);
    EXPECT_THROW(parse_phantom_kind("pld"), ValidationError);
    EXPECT_EQ(parse_phantom_kind("MCC"), PhantomKind::MCC);
}

TEST(Cohort, SeedsAndIds)
{
    auto base = small(PhantomKind::MCC, 0);
    auto cohort = generate_cohort(base, 3, 100);
    ASSERT_EQ(cohort.size(), 3u);
    for (std::size_t n = 0; n < 3; ++n) {
        EXPECT_EQ(cohort[n].id, "MCC-" + std::to_string(n));
        auto spec = base;
        spec.seed = 100 ^ n;
        EXPECT_EQ(cohort[n].volume, generate_phantom(spec, "y").volume);
    }
    EXPECT_THROW(generate_cohort(base, 0, 1), ValidationError);
}

TEST(Manifest, WriteLoadRoundTrip)
{
    TempDir dir;
    auto pld = generate_cohort(small(PhantomKind::PLD, 0), 2, 1);
    auto mcc = generate_cohort(small(PhantomKind::MCC, 0), 2, 1);
    write_cohort(pld, dir.path());
    write_cohort(mcc, dir.path());
    write_cohort({pld[0]}, dir.path());

    auto entries = read_manifest(dir / "manifest.jsonl");
    ASSERT_EQ(entries.size(), 4u);
    EXPECT_EQ(entries[0].id, "MCC-0");
    EXPECT_EQ(entries[0].volume, "MCC-0.svol");
    EXPECT_EQ(entries[0].mask, "MCC-0_mask.svol");
    auto first_line = segroute::testing::read_file(dir / "manifest.jsonl").substr(0, 80);
    EXPECT_EQ(first_line.rfind(R"({"id":"MCC-0","label":"MCC","volume":"MCC-0.svol","mask":"MCC-0_mask.svol"})", 0),
              0u);

    auto loaded = load_manifest(dir / "manifest.jsonl");
    ASSERT_EQ(loaded.size(), 4u);
    EXPECT_EQ(loaded[2].id, "PLD-0");
    EXPECT_EQ(loaded[2].volume, pld[0].volume);
    EXPECT_EQ(loaded[2].truth_mask, pld[0].truth_mask);
    EXPECT_EQ(loaded[2].true_label, "PLD");
}

TEST(Manifest, Errors)
{
    TempDir dir;
    EXPECT_THROW(read_manifest(dir / "missing.jsonl"), Error);
    segroute::testing::write_file(dir / "bad.jsonl", "{\"id\":\"a\"}\n");
    EXPECT_THROW(read_manifest(dir / "bad.jsonl"), ValidationError);
    segroute::testing::write_file(dir / "m.jsonl",
                                  R"({"id":"a","label":"PLD","volume":"a.svol","mask":"nope.svol"})" "\n");
    EXPECT_THROW(load_manifest(dir / "m.jsonl"), Error);
}
