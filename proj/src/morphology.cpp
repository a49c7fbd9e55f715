#include "segroute/morphology.hpp"

#include <algorithm>

#include "segroute/error.hpp"
#include "segroute/kernels.hpp"

namespace segroute {

Volume close_mask(const Volume& mask, int radius)
{
    require_kind(mask, PayloadKind::Mask, "close_mask");
    if (radius < 0)
        throw ValidationError("closing radius must be non-negative");
    if (radius == 0)
        return mask;
    auto m = mask.mask();
    Volume::MaskData a(m.begin(), m.end());
    Volume::MaskData b(a.size());
    for (int r = 0; r < radius; ++r) {
        kernels::dilate6(a, mask.dims(), b);
        std::swap(a, b);
    }
    for (int r = 0; r < radius; ++r) {
        kernels::erode6(a, mask.dims(), b);
        std::swap(a, b);
    }
    return mask.with_payload(std::move(a));
}

ComponentLabels label_components(const Volume& mask)
{
    auto m = mask.mask();
    const auto& d = mask.dims();
    ComponentLabels out;
    out.labels.assign(m.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < m.size(); ++seed) {
        if (!m[seed] || out.labels[seed])
            continue;
        const auto label = static_cast<std::uint32_t>(out.sizes.size() + 1);
        std::size_t size = 0;
        out.labels[seed] = label;
        stack.push_back(seed);
        while (!stack.empty()) {
            std::size_t cur = stack.back();
            stack.pop_back();
            ++size;
            auto [i, j, k] = mask.unravel(cur);
            auto visit = [&](std::size_t nb) {
                if (m[nb] && !out.labels[nb]) {
                    out.labels[nb] = label;
                    stack.push_back(nb);
                }
            };
            if (i > 0)
                visit(cur - 1);
            if (i + 1 < d[0])
                visit(cur + 1);
            if (j > 0)
                visit(cur - d[0]);
            if (j + 1 < d[1])
                visit(cur + d[0]);
            if (k > 0)
                visit(cur - d[0] * d[1]);
            if (k + 1 < d[2])
                visit(cur + d[0] * d[1]);
        }
        out.sizes.push_back(size);
    }
    return out;
}

Volume keep_largest_component(const Volume& mask)
{
    auto cc = label_components(mask);
    if (cc.sizes.empty())
        return mask;
    // max_element returns the first maximum, i.e. the earliest-found component.
    const auto keep =
        static_cast<std::uint32_t>(std::max_element(cc.sizes.begin(), cc.sizes.end()) - cc.sizes.begin() + 1);
    Volume::MaskData out(cc.labels.size());
    std::transform(cc.labels.begin(), cc.labels.end(), out.begin(),
                   [keep](std::uint32_t l) { return static_cast<std::uint8_t>(l == keep ? 1 : 0); });
    return mask.with_payload(std::move(out));
}

} // namespace segroute
