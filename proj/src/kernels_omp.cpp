#include <exception>

#include <omp.h>

#include "kernels_common.hpp"

namespace segroute::kernels {

void window(std::span<const std::int16_t> hu, double level, double width, std::span<float> out)
{
    const auto n = static_cast<std::ptrdiff_t>(hu.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t x = 0; x < n; ++x)
        out[x] = detail::window_value(hu[x], level, width);
}

std::vector<double> resize_box(std::span<const double> src, const Dims& src_dims, const Dims& dst_dims)
{
    std::vector<double> current(src.begin(), src.end());
    Dims dims = src_dims;
    for (int axis = 0; axis < 3; ++axis) {
        if (dims[axis] == dst_dims[axis])
            continue;
        auto shape = detail::pass_shape(dims, axis, dst_dims[axis]);
        auto aw = detail::axis_weights(shape.n, shape.m);
        std::vector<double> next(shape.inner * shape.outer * shape.m);
        const auto outer = static_cast<std::ptrdiff_t>(shape.outer);
        const auto m = static_cast<std::ptrdiff_t>(shape.m);
#pragma omp parallel for collapse(2) schedule(static)
        for (std::ptrdiff_t o = 0; o < outer; ++o)
            for (std::ptrdiff_t t = 0; t < m; ++t)
                detail::resample_row(current.data(), next.data(), shape, aw, static_cast<std::size_t>(o),
                                     static_cast<std::size_t>(t));
        current = std::move(next);
        dims[axis] = dst_dims[axis];
    }
    return current;
}

void dilate6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out)
{
    const auto nz = static_cast<std::ptrdiff_t>(dims[2]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < nz; ++k)
        detail::morph_slice(in.data(), dims, out.data(), static_cast<std::size_t>(k), false);
}

void erode6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out)
{
    const auto nz = static_cast<std::ptrdiff_t>(dims[2]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < nz; ++k)
        detail::morph_slice(in.data(), dims, out.data(), static_cast<std::size_t>(k), true);
}

void threshold_band(std::span<const float> in, float lo, float hi, std::span<std::uint8_t> out)
{
    const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t x = 0; x < n; ++x)
        out[x] = (in[x] >= lo && in[x] <= hi) ? 1 : 0;
}

IntensityStats intensity_stats(std::span<const float> values, const Dims& dims, std::size_t bins)
{
    const std::size_t slice = dims[0] * dims[1];
    const auto nz = static_cast<std::ptrdiff_t>(dims[2]);
    std::vector<IntensityStats> parts(dims[2]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < nz; ++k)
        parts[k] = detail::slice_stats(values.data() + static_cast<std::size_t>(k) * slice, slice, bins);

    IntensityStats total;
    total.histogram.assign(bins, 0);
    for (const auto& p : parts)
        detail::merge_stats(total, p);
    return total;
}

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn)
{
    const auto n = static_cast<std::ptrdiff_t>(count);
    std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t x = 0; x < n; ++x) {
        try {
            fn(static_cast<std::size_t>(x));
        } catch (...) {
#pragma omp critical(segroute_for_each_index_error)
            if (!first_error)
                first_error = std::current_exception();
        }
    }
    if (first_error)
        std::rethrow_exception(first_error);
}

void map_indices(const std::function<double(std::size_t)>& fn, std::span<double> out)
{
    for_each_index(out.size(), [&](std::size_t x) { out[x] = fn(x); });
}

void set_thread_count(int threads)
{
    if (threads > 0)
        omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

} // namespace segroute::kernels
