#pragma once

// Shared pieces of the parallel and reference kernels. Anything here is
// evaluated identically by both sides.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "segroute/kernels.hpp"

namespace segroute::kernels::detail {

/// Box weights along one axis when n source cells map onto m target cells.
/// Target t spans [t*n, (t+1)*n) and source s spans [s*m, (s+1)*m) in units
/// of 1/m, so overlaps are exact integers.
struct AxisWeights {
    std::vector<std::size_t> first; // first source index per target
    std::vector<std::vector<double>> weights;
};

inline AxisWeights axis_weights(std::size_t n, std::size_t m)
{
    AxisWeights aw;
    aw.first.resize(m);
    aw.weights.resize(m);
    for (std::size_t t = 0; t < m; ++t) {
        std::size_t lo = t * n, hi = (t + 1) * n;
        std::size_t s0 = lo / m, s1 = (hi - 1) / m;
        aw.first[t] = s0;
        for (std::size_t s = s0; s <= s1; ++s) {
            std::size_t overlap = std::min(hi, (s + 1) * m) - std::max(lo, s * m);
            aw.weights[t].push_back(static_cast<double>(overlap) / static_cast<double>(n));
        }
    }
    return aw;
}

/// Geometry of a resampling pass along `axis`: the grid is viewed as
/// outer x extent x inner, with inner contiguous.
struct PassShape {
    std::size_t inner = 1, outer = 1, n = 0, m = 0;
};

inline PassShape pass_shape(const Dims& dims, int axis, std::size_t m)
{
    PassShape p;
    for (int a = 0; a < axis; ++a)
        p.inner *= dims[a];
    for (int a = axis + 1; a < 3; ++a)
        p.outer *= dims[a];
    p.n = dims[axis];
    p.m = m;
    return p;
}

/// Computes one output row (fixed outer index o and target index t).
inline void resample_row(const double* src, double* dst, const PassShape& p, const AxisWeights& aw,
                         std::size_t o, std::size_t t)
{
    double* out = dst + (o * p.m + t) * p.inner;
    std::fill(out, out + p.inner, 0.0);
    const auto& w = aw.weights[t];
    for (std::size_t q = 0; q < w.size(); ++q) {
        const double* in = src + (o * p.n + aw.first[t] + q) * p.inner;
        for (std::size_t x = 0; x < p.inner; ++x)
            out[x] += w[q] * in[x];
    }
}

inline float window_value(std::int16_t hu, double level, double width)
{
    double x = (static_cast<double>(hu) - (level - width / 2.0)) / width;
    return static_cast<float>(std::clamp(x, 0.0, 1.0));
}

inline std::size_t bin_of(float x, std::size_t bins)
{
    double v = std::clamp(static_cast<double>(x), 0.0, 1.0);
    return std::min(static_cast<std::size_t>(v * static_cast<double>(bins)), bins - 1);
}

/// Stats for one z-slice; slices are combined in order by the callers.
inline IntensityStats slice_stats(const float* values, std::size_t count, std::size_t bins)
{
    IntensityStats s;
    s.histogram.assign(bins, 0);
    for (std::size_t n = 0; n < count; ++n) {
        float x = values[n];
        ++s.histogram[bin_of(x, bins)];
        s.sum += x;
        s.sum_squares += static_cast<double>(x) * x;
        if (x > 0.0f)
            ++s.foreground;
    }
    s.count = count;
    return s;
}

inline void merge_stats(IntensityStats& into, const IntensityStats& part)
{
    for (std::size_t b = 0; b < into.histogram.size(); ++b)
        into.histogram[b] += part.histogram[b];
    into.sum += part.sum;
    into.sum_squares += part.sum_squares;
    into.foreground += part.foreground;
    into.count += part.count;
}

inline bool in_grid(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t k, const Dims& d)
{
    return i >= 0 && j >= 0 && k >= 0 && static_cast<std::size_t>(i) < d[0] && static_cast<std::size_t>(j) < d[1] &&
           static_cast<std::size_t>(k) < d[2];
}

/// Dilation (erode == false) or erosion (erode == true) of one z-slice.
inline void morph_slice(const std::uint8_t* in, const Dims& d, std::uint8_t* out, std::size_t k, bool erode)
{
    static constexpr int offs[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    const std::size_t sx = 1, sy = d[0], sz = d[0] * d[1];
    for (std::size_t j = 0; j < d[1]; ++j) {
        for (std::size_t i = 0; i < d[0]; ++i) {
            std::size_t idx = i * sx + j * sy + k * sz;
            std::uint8_t v = in[idx];
            if (erode ? v == 0 : v == 1) {
                out[idx] = v;
                continue;
            }
            for (const auto& o : offs) {
                auto ni = static_cast<std::ptrdiff_t>(i) + o[0];
                auto nj = static_cast<std::ptrdiff_t>(j) + o[1];
                auto nk = static_cast<std::ptrdiff_t>(k) + o[2];
                std::uint8_t nv;
                if (in_grid(ni, nj, nk, d))
                    nv = in[static_cast<std::size_t>(ni) * sx + static_cast<std::size_t>(nj) * sy +
                            static_cast<std::size_t>(nk) * sz];
                else
                    nv = erode ? 1 : 0;
                if (erode ? nv == 0 : nv == 1) {
                    v = erode ? 0 : 1;
                    break;
                }
            }
            out[idx] = v;
        }
    }
}

} // namespace segroute::kernels::detail
