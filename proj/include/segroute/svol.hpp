#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "segroute/volume.hpp"

namespace segroute::svol {

// Layout, little-endian:
//   "SVOL" | u32 version | u32 dtype | 3 x u64 dims | 3 x f64 spacing |
//   3 ASCII orientation letters + NUL | voxels, x-fastest
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 64;

std::vector<std::byte> encode(const Volume& v);
Volume decode(std::span<const std::byte> bytes);

Volume read(const std::filesystem::path& path);
void write(const Volume& v, const std::filesystem::path& path);

} // namespace segroute::svol
