// Serial reference kernels against their OpenMP counterparts.
//
//   bench_kernels --benchmark_filter=resize

#include <benchmark/benchmark.h>

#include "segroute/kernels.hpp"
#include "segroute/rng.hpp"

using namespace segroute;

namespace {

constexpr Dims kDims{96, 96, 96};

std::vector<std::int16_t> hu_input()
{
    Rng rng(1);
    std::vector<std::int16_t> v(voxel_count(kDims));
    for (auto& x : v)
        x = static_cast<std::int16_t>(rng.integer(-1024, 1500));
    return v;
}

std::vector<double> real_input()
{
    Rng rng(2);
    std::vector<double> v(voxel_count(kDims));
    for (auto& x : v)
        x = rng.uniform();
    return v;
}

std::vector<std::uint8_t> mask_input()
{
    Rng rng(3);
    std::vector<std::uint8_t> v(voxel_count(kDims));
    for (auto& x : v)
        x = rng.uniform() < 0.4 ? 1 : 0;
    return v;
}

template <bool Parallel>
void BM_Window(benchmark::State& state)
{
    const auto in = hu_input();
    std::vector<float> out(in.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::window(in, 180.0, 440.0, out);
        else
            kernels::reference::window(in, 180.0, 440.0, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.size()));
}

template <bool Parallel>
void BM_Resize(benchmark::State& state)
{
    const auto in = real_input();
    const Dims target{128, 128, 128};
    for (auto _ : state) {
        auto out = Parallel ? kernels::resize_box(in, kDims, target) : kernels::reference::resize_box(in, kDims, target);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Dilate(benchmark::State& state)
{
    const auto in = mask_input();
    std::vector<std::uint8_t> out(in.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::dilate6(in, kDims, out);
        else
            kernels::reference::dilate6(in, kDims, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Stats(benchmark::State& state)
{
    const auto src = real_input();
    const std::vector<float> in(src.begin(), src.end());
    for (auto _ : state) {
        auto s = Parallel ? kernels::intensity_stats(in, kDims, 32) : kernels::reference::intensity_stats(in, kDims, 32);
        benchmark::DoNotOptimize(s);
    }
}

} // namespace

BENCHMARK(BM_Window<false>)->Name("window/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Window<true>)->Name("window/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resize<false>)->Name("resize/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resize<true>)->Name("resize/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dilate<false>)->Name("dilate/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dilate<true>)->Name("dilate/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Stats<false>)->Name("stats/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Stats<true>)->Name("stats/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
