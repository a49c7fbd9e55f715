#pragma once

#include <cstdint>
#include <vector>

#include "segroute/volume.hpp"

namespace segroute {

/// `radius` steps of 6-connected dilation followed by as many erosion steps,
/// i.e. closing with the L1 ball of that radius. Radius 0 is the identity.
Volume close_mask(const Volume& mask, int radius);

struct ComponentLabels {
    std::vector<std::uint32_t> labels; ///< 0 = background, components numbered from 1 in scan order
    std::vector<std::size_t> sizes;    ///< sizes[c-1] is the voxel count of component c
};

/// 6-connected component labelling of a mask.
ComponentLabels label_components(const Volume& mask);

/// Keeps only the largest 6-connected component; ties go to the component
/// found first in storage order. An empty mask stays empty.
Volume keep_largest_component(const Volume& mask);

} // namespace segroute
