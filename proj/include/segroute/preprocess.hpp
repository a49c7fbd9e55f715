#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "segroute/volume.hpp"

namespace segroute {

struct WindowSpec {
    double level = 180.0;
    double width = 440.0;
};

enum class Axis : int { I = 0, J = 1, K = 2 };

/// Random rotation about the k (superior-inferior) axis and per-axis flips.
struct AugmentSpec {
    std::vector<int> rotation_angles;   ///< subset of {90, 180, 270}
    std::array<bool, 3> flip_axes{};    ///< flip axis a with probability 1/2 when set
    std::uint64_t seed = 0;
};

/// HU -> [0,1]. Throws PayloadTypeError for non-HU input, ValidationError for width <= 0.
Volume window(const Volume& v, const WindowSpec& w = {});

/// Box-interpolated resample to `target` dims; spacing scales so the physical
/// extent is unchanged. Real stays Real, HU is rounded back to HU, and masks
/// are averaged as reals then re-binarized at 0.5.
Volume resize_box(const Volume& v, const Dims& target);

/// Rotation by a multiple of 90 degrees in the (i, j) plane.
/// 90 maps (i, j) to (ny-1-j, i). Throws ValidationError for other angles
/// and for 90/270 on non-square in-plane dims.
Volume rotate_k(const Volume& v, int angle_degrees);
Volume flip(const Volume& v, Axis axis);

/// Seeded augmentation: one rotation drawn uniformly from {0} U rotation_angles,
/// then each enabled axis flipped with probability 1/2. The draw depends only
/// on (spec.seed, salt), typically the scan id.
Volume augment(const Volume& v, const AugmentSpec& spec, std::string_view salt);

inline constexpr Dims kClassifierDims{128, 128, 128};

/// window -> reorient to LPS -> resize. Output is Real, LPS, `dims`.
Volume preprocess_for_classification(const Volume& v, const WindowSpec& w = {}, const Dims& dims = kClassifierDims);

} // namespace segroute
