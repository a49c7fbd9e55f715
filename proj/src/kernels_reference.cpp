#include <exception>

#include "kernels_common.hpp"

namespace segroute::kernels::reference {

void window(std::span<const std::int16_t> hu, double level, double width, std::span<float> out)
{
    for (std::size_t x = 0; x < hu.size(); ++x)
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
        for (std::size_t o = 0; o < shape.outer; ++o)
            for (std::size_t t = 0; t < shape.m; ++t)
                detail::resample_row(current.data(), next.data(), shape, aw, o, t);
        current = std::move(next);
        dims[axis] = dst_dims[axis];
    }
    return current;
}

void dilate6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out)
{
    for (std::size_t k = 0; k < dims[2]; ++k)
        detail::morph_slice(in.data(), dims, out.data(), k, false);
}

void erode6(std::span<const std::uint8_t> in, const Dims& dims, std::span<std::uint8_t> out)
{
    for (std::size_t k = 0; k < dims[2]; ++k)
        detail::morph_slice(in.data(), dims, out.data(), k, true);
}

void threshold_band(std::span<const float> in, float lo, float hi, std::span<std::uint8_t> out)
{
    for (std::size_t x = 0; x < in.size(); ++x)
        out[x] = (in[x] >= lo && in[x] <= hi) ? 1 : 0;
}

IntensityStats intensity_stats(std::span<const float> values, const Dims& dims, std::size_t bins)
{
    const std::size_t slice = dims[0] * dims[1];
    IntensityStats total;
    total.histogram.assign(bins, 0);
    for (std::size_t k = 0; k < dims[2]; ++k)
        detail::merge_stats(total, detail::slice_stats(values.data() + k * slice, slice, bins));
    return total;
}

void map_indices(const std::function<double(std::size_t)>& fn, std::span<double> out)
{
    for (std::size_t x = 0; x < out.size(); ++x)
        out[x] = fn(x);
}

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn)
{
    std::exception_ptr first_error;
    for (std::size_t x = 0; x < count; ++x) {
        try {
            fn(x);
        } catch (...) {
            if (!first_error)
                first_error = std::current_exception();
        }
    }
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace segroute::kernels::reference
