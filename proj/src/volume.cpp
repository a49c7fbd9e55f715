#include "segroute/volume.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "segroute/error.hpp"

namespace segroute {

namespace {

int pair_of(char c)
{
    switch (c) {
    case 'L':
    case 'R':
        return 0;
    case 'P':
    case 'A':
        return 1;
    case 'S':
    case 'I':
        return 2;
    default:
        return -1;
    }
}

template <typename T>
std::span<const T> typed_view(const Volume::Payload& p, PayloadKind want, PayloadKind have)
{
    if (const auto* data = std::get_if<std::vector<T>>(&p))
        return {data->data(), data->size()};
    throw PayloadTypeError(fmt::format("expected {} payload, got {}", to_string(want), to_string(have)));
}

} // namespace

Orientation Orientation::parse(std::string_view code)
{
    if (code.size() != 3)
        throw ValidationError(fmt::format("orientation code '{}' must have three letters", code));
    std::array<char, 3> letters{};
    std::array<bool, 3> seen{};
    for (std::size_t a = 0; a < 3; ++a) {
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(code[a])));
        int p = pair_of(c);
        if (p < 0 || seen[p])
            throw ValidationError(fmt::format("invalid orientation code '{}'", code));
        seen[p] = true;
        letters[a] = c;
    }
    return Orientation(letters);
}

Orientation Orientation::lps() { return Orientation({'L', 'P', 'S'}); }
Orientation Orientation::ras() { return Orientation({'R', 'A', 'S'}); }

const std::array<Orientation, 48>& Orientation::all()
{
    static const std::array<Orientation, 48> codes = [] {
        std::array<Orientation, 48> out;
        constexpr std::array<std::array<char, 2>, 3> pairs{{{'L', 'R'}, {'P', 'A'}, {'S', 'I'}}};
        std::array<int, 3> perm{0, 1, 2};
        std::size_t n = 0;
        do {
            for (int polarity = 0; polarity < 8; ++polarity) {
                std::array<char, 3> letters{};
                for (int a = 0; a < 3; ++a)
                    letters[a] = pairs[perm[a]][(polarity >> a) & 1];
                out[n++] = Orientation(letters);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return out;
    }();
    return codes;
}

int Orientation::anatomical_axis(int storage_axis) const { return pair_of(letters_[storage_axis]); }

bool Orientation::points_lps(int storage_axis) const
{
    char c = letters_[storage_axis];
    return c == 'L' || c == 'P' || c == 'S';
}

std::string_view to_string(PayloadKind kind)
{
    switch (kind) {
    case PayloadKind::HU:
        return "HU";
    case PayloadKind::Mask:
        return "Mask";
    case PayloadKind::Real:
        return "Real";
    }
    return "?";
}

Volume::Volume(Geometry geometry, Payload payload)
    : geometry_(std::move(geometry)), payload_(std::move(payload))
{
    for (int a = 0; a < 3; ++a) {
        if (geometry_.dims[a] == 0)
            throw ValidationError("volume dims must be positive");
        if (!(geometry_.spacing[a] > 0.0) || !std::isfinite(geometry_.spacing[a]))
            throw ValidationError("volume spacing must be positive and finite");
    }
    std::size_t n = std::visit([](const auto& d) { return d.size(); }, payload_);
    if (n != size())
        throw ValidationError(fmt::format("payload has {} voxels, dims {}x{}x{} need {}", n, geometry_.dims[0],
                                          geometry_.dims[1], geometry_.dims[2], size()));
    if (const auto* m = std::get_if<MaskData>(&payload_)) {
        if (std::any_of(m->begin(), m->end(), [](std::uint8_t x) { return x > 1; }))
            throw ValidationError("mask voxels must be 0 or 1");
    } else if (const auto* r = std::get_if<RealData>(&payload_)) {
        if (std::any_of(r->begin(), r->end(), [](float x) { return !std::isfinite(x); }))
            throw ValidationError("real voxels must be finite");
    }
}

std::span<const std::int16_t> Volume::hu() const
{
    return typed_view<std::int16_t>(payload_, PayloadKind::HU, kind());
}
std::span<const std::uint8_t> Volume::mask() const
{
    return typed_view<std::uint8_t>(payload_, PayloadKind::Mask, kind());
}
std::span<const float> Volume::real() const { return typed_view<float>(payload_, PayloadKind::Real, kind()); }

VoxelIndex Volume::unravel(std::size_t linear) const
{
    const auto& d = geometry_.dims;
    return {linear % d[0], (linear / d[0]) % d[1], linear / (d[0] * d[1])};
}

double Volume::value(std::size_t linear) const
{
    return std::visit([linear](const auto& d) { return static_cast<double>(d[linear]); }, payload_);
}

std::vector<double> Volume::to_doubles() const
{
    return std::visit([](const auto& d) { return std::vector<double>(d.begin(), d.end()); }, payload_);
}

bool Volume::operator==(const Volume& other) const
{
    if (!(geometry_ == other.geometry_) || payload_.index() != other.payload_.index())
        return false;
    return std::visit(
        [&](const auto& mine) {
            using Vec = std::decay_t<decltype(mine)>;
            const auto& theirs = std::get<Vec>(other.payload_);
            return std::memcmp(mine.data(), theirs.data(), mine.size() * sizeof(typename Vec::value_type)) == 0;
        },
        payload_);
}

void require_kind(const Volume& v, PayloadKind kind, std::string_view context)
{
    if (v.kind() != kind)
        throw PayloadTypeError(
            fmt::format("{}: expected {} payload, got {}", context, to_string(kind), to_string(v.kind())));
}

void require_same_dims(const Volume& a, const Volume& b, std::string_view context)
{
    if (a.dims() != b.dims())
        throw GeometryError(fmt::format("{}: dims {}x{}x{} vs {}x{}x{}", context, a.dims()[0], a.dims()[1],
                                        a.dims()[2], b.dims()[0], b.dims()[1], b.dims()[2]));
}

Volume reorient(const Volume& v, Orientation target)
{
    const Orientation source = v.orientation();
    if (source == target)
        return v;

    // For each target axis: which source axis feeds it, and whether it runs backwards.
    std::array<int, 3> src_axis{};
    std::array<bool, 3> flip{};
    for (int t = 0; t < 3; ++t) {
        int anatomical = target.anatomical_axis(t);
        for (int s = 0; s < 3; ++s) {
            if (source.anatomical_axis(s) == anatomical) {
                src_axis[t] = s;
                flip[t] = source.letter(s) != target.letter(t);
            }
        }
    }

    Geometry g;
    g.orientation = target;
    for (int t = 0; t < 3; ++t) {
        g.dims[t] = v.dims()[src_axis[t]];
        g.spacing[t] = v.spacing()[src_axis[t]];
    }

    // Source stride contributed by one step along each target axis.
    const Dims& sd = v.dims();
    const std::array<std::size_t, 3> src_stride{1, sd[0], sd[0] * sd[1]};
    std::array<std::ptrdiff_t, 3> step{};
    std::size_t origin = 0;
    for (int t = 0; t < 3; ++t) {
        auto stride = static_cast<std::ptrdiff_t>(src_stride[src_axis[t]]);
        if (flip[t]) {
            origin += (g.dims[t] - 1) * src_stride[src_axis[t]];
            step[t] = -stride;
        } else {
            step[t] = stride;
        }
    }

    return std::visit(
        [&](const auto& data) {
            std::decay_t<decltype(data)> out(data.size());
            std::size_t n = 0;
            for (std::size_t k = 0; k < g.dims[2]; ++k) {
                for (std::size_t j = 0; j < g.dims[1]; ++j) {
                    auto src = static_cast<std::ptrdiff_t>(origin) + static_cast<std::ptrdiff_t>(k) * step[2] +
                               static_cast<std::ptrdiff_t>(j) * step[1];
                    for (std::size_t i = 0; i < g.dims[0]; ++i, src += step[0])
                        out[n++] = data[static_cast<std::size_t>(src)];
                }
            }
            return Volume(g, std::move(out));
        },
        v.payload());
}

Volume reorient(const Volume& v, std::string_view target_code) { return reorient(v, Orientation::parse(target_code)); }

std::size_t count_foreground(const Volume& mask)
{
    auto m = mask.mask();
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

} // namespace segroute
