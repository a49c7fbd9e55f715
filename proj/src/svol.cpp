#include "segroute/svol.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "segroute/error.hpp"

namespace segroute::svol {

namespace {

template <typename U>
void put_le(std::vector<std::byte>& out, U value)
{
    for (std::size_t b = 0; b < sizeof(U); ++b)
        out.push_back(static_cast<std::byte>((value >> (8 * b)) & 0xFF));
}

template <typename U>
U get_le(const std::byte* p)
{
    U value = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
        value |= static_cast<U>(std::to_integer<std::uint8_t>(p[b])) << (8 * b);
    return value;
}

template <typename T>
using UnsignedOf = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                                      std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>>;

template <typename T>
void put_voxels(std::vector<std::byte>& out, const std::vector<T>& data)
{
    if constexpr (std::endian::native == std::endian::little) {
        const auto* p = reinterpret_cast<const std::byte*>(data.data());
        out.insert(out.end(), p, p + data.size() * sizeof(T));
    } else {
        for (T x : data)
            put_le(out, std::bit_cast<UnsignedOf<T>>(x));
    }
}

template <typename T>
std::vector<T> get_voxels(const std::byte* p, std::size_t count)
{
    std::vector<T> data(count);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(data.data(), p, count * sizeof(T));
    } else {
        for (std::size_t n = 0; n < count; ++n)
            data[n] = std::bit_cast<T>(get_le<UnsignedOf<T>>(p + n * sizeof(T)));
    }
    return data;
}

std::size_t element_size(std::uint32_t dtype)
{
    switch (dtype) {
    case 0:
        return 2;
    case 1:
        return 1;
    case 2:
        return 4;
    default:
        throw FormatError(fmt::format("unknown SVOL dtype code {}", dtype));
    }
}

} // namespace

std::vector<std::byte> encode(const Volume& v)
{
    std::vector<std::byte> out;
    out.reserve(kHeaderSize + v.size() * 4);
    for (char c : {'S', 'V', 'O', 'L'})
        out.push_back(static_cast<std::byte>(c));
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.kind()));
    for (std::size_t d : v.dims())
        put_le<std::uint64_t>(out, d);
    for (double s : v.spacing())
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(s));
    for (int a = 0; a < 3; ++a)
        out.push_back(static_cast<std::byte>(v.orientation().letter(a)));
    out.push_back(std::byte{0});
    std::visit([&](const auto& data) { put_voxels(out, data); }, v.payload());
    return out;
}

Volume decode(std::span<const std::byte> bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SVOL", 4) != 0)
        throw BadMagicError("not an SVOL file (bad magic)");
    if (bytes.size() < kHeaderSize)
        throw TruncatedPayloadError(fmt::format("SVOL header truncated: {} of {} bytes", bytes.size(), kHeaderSize));
    const std::byte* p = bytes.data();
    auto version = get_le<std::uint32_t>(p + 4);
    if (version != kVersion)
        throw UnsupportedVersionError(fmt::format("unsupported SVOL version {}", version));
    auto dtype = get_le<std::uint32_t>(p + 8);
    std::size_t esize = element_size(dtype);

    Dims dims{};
    std::size_t count = 1;
    for (int a = 0; a < 3; ++a) {
        auto d = get_le<std::uint64_t>(p + 12 + 8 * a);
        if (d == 0)
            throw FormatError("SVOL dims must be positive");
        if (count > std::numeric_limits<std::size_t>::max() / esize / d)
            throw PayloadSizeMismatchError("SVOL dims overflow the addressable payload size");
        dims[a] = d;
        count *= d;
    }
    Spacing spacing{};
    for (int a = 0; a < 3; ++a)
        spacing[a] = std::bit_cast<double>(get_le<std::uint64_t>(p + 36 + 8 * a));
    if (std::to_integer<int>(p[63]) != 0)
        throw FormatError("SVOL orientation pad byte must be zero");
    std::string code{static_cast<char>(p[60]), static_cast<char>(p[61]), static_cast<char>(p[62])};
    Orientation orientation;
    try {
        orientation = Orientation::parse(code);
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }

    std::size_t payload_bytes = bytes.size() - kHeaderSize;
    std::size_t expected = count * esize;
    if (payload_bytes < expected)
        throw TruncatedPayloadError(
            fmt::format("SVOL payload truncated: {} of {} bytes", payload_bytes, expected));
    if (payload_bytes > expected)
        throw PayloadSizeMismatchError(
            fmt::format("SVOL payload has {} bytes but dims require {}", payload_bytes, expected));

    const std::byte* voxels = p + kHeaderSize;
    Volume::Payload payload;
    switch (dtype) {
    case 0:
        payload = get_voxels<std::int16_t>(voxels, count);
        break;
    case 1:
        payload = get_voxels<std::uint8_t>(voxels, count);
        break;
    default:
        payload = get_voxels<float>(voxels, count);
        break;
    }
    try {
        return Volume(Geometry{dims, spacing, orientation}, std::move(payload));
    } catch (const ValidationError& e) {
        throw FormatError(fmt::format("SVOL content invalid: {}", e.what()));
    }
}

Volume read(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(fmt::format("cannot open {}", path.string()));
    in.seekg(0, std::ios::end);
    auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::byte> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in)
        throw Error(fmt::format("failed reading {}", path.string()));
    return decode(bytes);
}

void write(const Volume& v, const std::filesystem::path& path)
{
    auto bytes = encode(v);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(fmt::format("cannot open {} for writing", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(fmt::format("failed writing {}", path.string()));
}

} // namespace segroute::svol
