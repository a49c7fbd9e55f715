#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace segroute {

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;

inline std::size_t voxel_count(const Dims& d) { return d[0] * d[1] * d[2]; }

/// Axis-aligned anatomical orientation. Letter a names the direction in which
/// storage axis a increases, e.g. "LPS" means i increases toward patient
/// Left, j toward Posterior, k toward Superior.
class Orientation {
public:
    Orientation() = default; // LPS
    /// Parses a three-letter code such as "LPS" or "ras". Throws ValidationError.
    static Orientation parse(std::string_view code);
    static Orientation lps();
    static Orientation ras();
    /// All 48 valid codes in a fixed order.
    static const std::array<Orientation, 48>& all();

    char letter(int storage_axis) const { return letters_[storage_axis]; }
    /// 0 for the L/R pair, 1 for P/A, 2 for S/I.
    int anatomical_axis(int storage_axis) const;
    /// True when the letter is the first of its pair (L, P or S).
    bool points_lps(int storage_axis) const;
    std::string str() const { return {letters_.begin(), letters_.end()}; }

    auto operator<=>(const Orientation&) const = default;

private:
    explicit Orientation(std::array<char, 3> letters) : letters_(letters) {}
    std::array<char, 3> letters_{'L', 'P', 'S'};
};

struct VoxelIndex {
    std::size_t i = 0, j = 0, k = 0;
    auto operator<=>(const VoxelIndex&) const = default;
};

enum class PayloadKind : std::uint32_t { HU = 0, Mask = 1, Real = 2 };

std::string_view to_string(PayloadKind kind);

struct Geometry {
    Dims dims{1, 1, 1};
    Spacing spacing{1.0, 1.0, 1.0};
    Orientation orientation = Orientation::lps();

    bool operator==(const Geometry&) const = default;
};

/// Dense 3D voxel grid, x-fastest storage. Immutable once constructed.
class Volume {
public:
    using HuData = std::vector<std::int16_t>;
    using MaskData = std::vector<std::uint8_t>;
    using RealData = std::vector<float>;
    using Payload = std::variant<HuData, MaskData, RealData>;

    /// Validates the geometry and payload; throws ValidationError.
    Volume(Geometry geometry, Payload payload);

    const Geometry& geometry() const { return geometry_; }
    const Dims& dims() const { return geometry_.dims; }
    const Spacing& spacing() const { return geometry_.spacing; }
    Orientation orientation() const { return geometry_.orientation; }
    PayloadKind kind() const { return static_cast<PayloadKind>(payload_.index()); }
    std::size_t size() const { return voxel_count(geometry_.dims); }
    const Payload& payload() const { return payload_; }

    // Typed views; each throws PayloadTypeError on the wrong kind.
    std::span<const std::int16_t> hu() const;
    std::span<const std::uint8_t> mask() const;
    std::span<const float> real() const;

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const
    {
        return i + geometry_.dims[0] * (j + geometry_.dims[1] * k);
    }
    std::size_t index(const VoxelIndex& v) const { return index(v.i, v.j, v.k); }
    VoxelIndex unravel(std::size_t linear) const;

    /// Voxel value promoted to double, whatever the payload kind.
    double value(std::size_t linear) const;
    /// Whole payload promoted to double.
    std::vector<double> to_doubles() const;

    /// Same geometry, new payload.
    Volume with_payload(Payload payload) const { return {geometry_, std::move(payload)}; }

    /// Bit-exact equality of geometry and payload.
    bool operator==(const Volume& other) const;

private:
    Geometry geometry_;
    Payload payload_;
};

void require_kind(const Volume& v, PayloadKind kind, std::string_view context);
void require_same_dims(const Volume& a, const Volume& b, std::string_view context);

/// Permutes and flips axes so that the result is stored in `target`
/// orientation. Dims and spacing follow the axis permutation.
Volume reorient(const Volume& v, Orientation target);
Volume reorient(const Volume& v, std::string_view target_code);

/// Number of foreground voxels in a mask.
std::size_t count_foreground(const Volume& mask);

} // namespace segroute
