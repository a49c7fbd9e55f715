#include "segroute/occlusion.hpp"

#include <fmt/format.h>

#include "segroute/error.hpp"
#include "segroute/kernels.hpp"

namespace segroute {

std::vector<std::size_t> occlusion_anchors(std::size_t n, std::size_t patch, std::size_t stride)
{
    if (patch == 0 || stride == 0)
        throw ValidationError("occlusion patch and stride must be positive");
    if (patch > n)
        throw ValidationError(fmt::format("occlusion patch {} larger than volume extent {}", patch, n));
    if (stride > n)
        throw ValidationError(fmt::format("occlusion stride {} larger than volume extent {}", stride, n));
    std::vector<std::size_t> anchors;
    for (std::size_t a = 0; a + patch <= n; a += stride)
        anchors.push_back(a);
    if (anchors.back() != n - patch)
        anchors.push_back(n - patch);
    return anchors;
}

OcclusionResult occlusion_map(const Classifier& classifier, const Volume& v, const OcclusionSpec& spec, bool parallel)
{
    require_kind(v, PayloadKind::Real, "occlusion_map");
    const auto& d = v.dims();
    std::array<std::vector<std::size_t>, 3> axes;
    for (int a = 0; a < 3; ++a)
        axes[a] = occlusion_anchors(d[a], spec.patch[a], spec.stride[a]);

    std::vector<VoxelIndex> anchors;
    for (std::size_t k : axes[2])
        for (std::size_t j : axes[1])
            for (std::size_t i : axes[0])
                anchors.push_back({i, j, k});

    const double baseline = classifier.classify(v).at(spec.target_class);
    const auto source = v.real();
    const auto fill = static_cast<float>(spec.fill_value);

    auto evaluate = [&](std::size_t n) {
        const VoxelIndex& a = anchors[n];
        Volume::RealData occluded(source.begin(), source.end());
        for (std::size_t k = a.k; k < a.k + spec.patch[2]; ++k)
            for (std::size_t j = a.j; j < a.j + spec.patch[1]; ++j)
                for (std::size_t i = a.i; i < a.i + spec.patch[0]; ++i)
                    occluded[v.index(i, j, k)] = fill;
        return baseline - classifier.classify(v.with_payload(std::move(occluded))).at(spec.target_class);
    };

    std::vector<double> deltas(anchors.size());
    if (parallel)
        kernels::map_indices(evaluate, deltas);
    else
        kernels::reference::map_indices(evaluate, deltas);

    // Accumulate in anchor order so the sums never depend on scheduling.
    std::vector<double> sum(v.size(), 0.0);
    std::vector<std::uint32_t> coverage(v.size(), 0);
    OcclusionResult result{v, {}};
    for (std::size_t n = 0; n < anchors.size(); ++n) {
        const VoxelIndex& a = anchors[n];
        for (std::size_t k = a.k; k < a.k + spec.patch[2]; ++k)
            for (std::size_t j = a.j; j < a.j + spec.patch[1]; ++j)
                for (std::size_t i = a.i; i < a.i + spec.patch[0]; ++i) {
                    sum[v.index(i, j, k)] += deltas[n];
                    ++coverage[v.index(i, j, k)];
                }
        result.anchors.push_back({a, deltas[n]});
    }

    Volume::RealData map(v.size());
    for (std::size_t x = 0; x < map.size(); ++x)
        map[x] = static_cast<float>(sum[x] / coverage[x]);
    result.map = v.with_payload(std::move(map));
    return result;
}

std::string occlusion_csv(const OcclusionResult& result)
{
    std::string out = "anchor_i,anchor_j,anchor_k,delta\n";
    for (const auto& a : result.anchors)
        out += fmt::format("{},{},{},{:.9g}\n", a.anchor.i, a.anchor.j, a.anchor.k, a.delta);
    return out;
}

} // namespace segroute
