#pragma once

#include <string>
#include <vector>

#include "segroute/models.hpp"
#include "segroute/volume.hpp"

namespace segroute {

struct OcclusionSpec {
    Dims patch{16, 16, 16};
    Dims stride{8, 8, 8};
    double fill_value = 0.0;
    ClassLabel target_class;
};

struct OcclusionAnchor {
    VoxelIndex anchor;
    double delta = 0.0; ///< p_target(original) - p_target(occluded)
};

struct OcclusionResult {
    Volume map;
    std::vector<OcclusionAnchor> anchors; ///< in evaluation order (i fastest)
};

/// Anchor positions along one axis: 0, stride, 2*stride, ... while the patch
/// fits, plus n - patch so the far edge is always covered.
std::vector<std::size_t> occlusion_anchors(std::size_t n, std::size_t patch, std::size_t stride);

/// Occlusion sensitivity of `classifier` for `spec.target_class`.
///
/// Every patch on the anchor grid is overwritten with the fill value and the
/// drop in target probability is recorded. Each voxel of the map holds the
/// mean drop over the patches that cover it, so positive values mark regions
/// that support the prediction. Patch evaluations run in parallel unless
/// `parallel` is false; the result is identical either way.
OcclusionResult occlusion_map(const Classifier& classifier, const Volume& v, const OcclusionSpec& spec,
                              bool parallel = true);

/// anchor_i,anchor_j,anchor_k,delta rows.
std::string occlusion_csv(const OcclusionResult& result);

} // namespace segroute
