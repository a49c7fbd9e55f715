#include "segroute/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "segroute/error.hpp"
#include "segroute/kernels.hpp"
#include "segroute/rng.hpp"

namespace segroute {

Volume window(const Volume& v, const WindowSpec& w)
{
    require_kind(v, PayloadKind::HU, "window");
    if (!(w.width > 0.0))
        throw ValidationError("window width must be positive");
    Volume::RealData out(v.size());
    kernels::window(v.hu(), w.level, w.width, out);
    return v.with_payload(std::move(out));
}

Volume resize_box(const Volume& v, const Dims& target)
{
    if (target[0] == 0 || target[1] == 0 || target[2] == 0)
        throw ValidationError("resize target dims must be positive");
    if (target == v.dims())
        return v;

    auto values = kernels::resize_box(v.to_doubles(), v.dims(), target);

    Geometry g = v.geometry();
    for (int a = 0; a < 3; ++a)
        g.spacing[a] = v.spacing()[a] * static_cast<double>(v.dims()[a]) / static_cast<double>(target[a]);
    g.dims = target;

    switch (v.kind()) {
    case PayloadKind::HU: {
        Volume::HuData out(values.size());
        std::transform(values.begin(), values.end(), out.begin(), [](double x) {
            return static_cast<std::int16_t>(std::clamp(std::round(x), -32768.0, 32767.0));
        });
        return {g, std::move(out)};
    }
    case PayloadKind::Mask: {
        Volume::MaskData out(values.size());
        std::transform(values.begin(), values.end(), out.begin(),
                       [](double x) { return static_cast<std::uint8_t>(x >= 0.5 ? 1 : 0); });
        return {g, std::move(out)};
    }
    case PayloadKind::Real:
        break;
    }
    return {g, Volume::RealData(values.begin(), values.end())};
}

Volume rotate_k(const Volume& v, int angle_degrees)
{
    int angle = ((angle_degrees % 360) + 360) % 360;
    if (angle % 90 != 0)
        throw ValidationError(fmt::format("rotation angle {} is not a multiple of 90", angle_degrees));
    if (angle == 0)
        return v;
    const auto [nx, ny, nz] = v.dims();
    if (angle != 180 && nx != ny)
        throw ValidationError(fmt::format("{} degree rotation needs square in-plane dims, got {}x{}", angle, nx, ny));

    Geometry g = v.geometry();
    if (angle != 180)
        std::swap(g.spacing[0], g.spacing[1]);

    auto target = [&](std::size_t i, std::size_t j) -> std::pair<std::size_t, std::size_t> {
        switch (angle) {
        case 90:
            return {ny - 1 - j, i};
        case 180:
            return {nx - 1 - i, ny - 1 - j};
        default:
            return {j, nx - 1 - i};
        }
    };

    return std::visit(
        [&](const auto& data) {
            std::decay_t<decltype(data)> out(data.size());
            for (std::size_t k = 0; k < nz; ++k)
                for (std::size_t j = 0; j < ny; ++j)
                    for (std::size_t i = 0; i < nx; ++i) {
                        auto [ti, tj] = target(i, j);
                        out[v.index(ti, tj, k)] = data[v.index(i, j, k)];
                    }
            return Volume(g, std::move(out));
        },
        v.payload());
}

Volume flip(const Volume& v, Axis axis)
{
    const int a = static_cast<int>(axis);
    const auto& d = v.dims();
    return std::visit(
        [&](const auto& data) {
            std::decay_t<decltype(data)> out(data.size());
            for (std::size_t k = 0; k < d[2]; ++k)
                for (std::size_t j = 0; j < d[1]; ++j)
                    for (std::size_t i = 0; i < d[0]; ++i) {
                        std::array<std::size_t, 3> src{i, j, k};
                        src[a] = d[a] - 1 - src[a];
                        out[v.index(i, j, k)] = data[v.index(src[0], src[1], src[2])];
                    }
            return Volume(v.geometry(), std::move(out));
        },
        v.payload());
}

Volume augment(const Volume& v, const AugmentSpec& spec, std::string_view salt)
{
    std::vector<int> choices{0};
    for (int angle : spec.rotation_angles) {
        if (angle != 90 && angle != 180 && angle != 270)
            throw ValidationError(fmt::format("augmentation angle {} not in {{90, 180, 270}}", angle));
        if (angle != 180 && v.dims()[0] != v.dims()[1])
            throw ValidationError(fmt::format("{} degree rotation requested on non-square in-plane dims {}x{}",
                                              angle, v.dims()[0], v.dims()[1]));
        choices.push_back(angle);
    }
    std::sort(choices.begin(), choices.end());
    choices.erase(std::unique(choices.begin(), choices.end()), choices.end());

    Rng rng(spec.seed ^ hash_string(salt));
    int angle = choices[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(choices.size()) - 1))];
    Volume out = rotate_k(v, angle);
    for (int a = 0; a < 3; ++a) {
        if (spec.flip_axes[a] && rng.coin())
            out = flip(out, static_cast<Axis>(a));
    }
    return out;
}

Volume preprocess_for_classification(const Volume& v, const WindowSpec& w, const Dims& dims)
{
    return resize_box(reorient(window(v, w), Orientation::lps()), dims);
}

} // namespace segroute
