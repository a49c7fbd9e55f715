#pragma once

// Data-parallel inner loops. Every kernel in `segroute::kernels` has a plain
// serial twin in `segroute::kernels::reference` with the same signature; the
// tests hold the two to identical output and the benchmark compares them.
//
// Parallel kernels partition work by fixed blocks (z-slices, lines, list
// indices) and combine partial results in block order, so output does not
// depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "segroute/volume.hpp"

namespace segroute::kernels {

/// Intensity statistics over values expected in [0,1].
struct IntensityStats {
    std::vector<std::uint64_t> histogram; ///< equal bins over [0,1], last bin right-closed
    double sum = 0.0;
    double sum_squares = 0.0;
    std::uint64_t foreground = 0; ///< values > 0
    std::uint64_t count = 0;
};

/// Linear HU window to [0,1]: clamp((x - (level - width/2)) / width, 0, 1).
void window(std::span<const std::int16_t> hu, double level, double width, std::span<float> out);

/// Box-filter resample of an x-fastest grid. Each output voxel is the
/// overlap-weighted mean of the source voxels under its box.
std::vector<double> resize_box(std::span<const double> src, const Dims& src_dims, const Dims& dst_dims);

/// One step of 6-connected binary dilation. Outside the grid counts as background.
void dilate6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out);
/// One step of 6-connected binary erosion. Outside the grid counts as foreground,
/// which keeps dilation followed by erosion extensive at the borders.
void erode6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out);

/// 1 where lo <= x <= hi.
void threshold_band(std::span<const float> in, float lo, float hi, std::span<std::uint8_t> out);

IntensityStats intensity_stats(std::span<const float> values, const Dims& dims, std::size_t bins);

/// out[n] = fn(n) for n in [0, out.size()). fn must be safe to call concurrently.
void map_indices(const std::function<double(std::size_t)>& fn, std::span<double> out);

/// Calls fn(n) for n in [0, count). The first exception thrown is rethrown
/// after the loop completes.
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn);

namespace reference {

void window(std::span<const std::int16_t> hu, double level, double width, std::span<float> out);
std::vector<double> resize_box(std::span<const double> src, const Dims& src_dims, const Dims& dst_dims);
void dilate6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out);
void erode6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out);
void threshold_band(std::span<const float> in, float lo, float hi, std::span<std::uint8_t> out);
IntensityStats intensity_stats(std::span<const float> values, const Dims& dims, std::size_t bins);
void map_indices(const std::function<double(std::size_t)>& fn, std::span<double> out);
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace reference

/// Sets the OpenMP team size used by the parallel kernels and dataset loops.
void set_thread_count(int threads);
int thread_count();

} // namespace segroute::kernels
