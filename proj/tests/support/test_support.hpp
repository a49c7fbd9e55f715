#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "segroute/rng.hpp"
#include "segroute/volume.hpp"

namespace segroute::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::string pattern = (std::filesystem::temp_directory_path() / "segroute-test-XXXXXX").string();
        path_ = ::mkdtemp(pattern.data());
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline Geometry geometry(Dims dims, Orientation o = Orientation::lps(), Spacing s = {1.0, 1.0, 1.0})
{
    return {dims, s, o};
}

inline Volume random_hu(Rng& rng, Dims dims, Orientation o = Orientation::lps(), int lo = -1024, int hi = 1500)
{
    Volume::HuData data(voxel_count(dims));
    for (auto& v : data)
        v = static_cast<std::int16_t>(rng.integer(lo, hi));
    return {geometry(dims, o), std::move(data)};
}

inline Volume random_real(Rng& rng, Dims dims, Orientation o = Orientation::lps())
{
    Volume::RealData data(voxel_count(dims));
    for (auto& v : data)
        v = static_cast<float>(rng.uniform());
    return {geometry(dims, o), std::move(data)};
}

inline Volume random_mask(Rng& rng, Dims dims, double p = 0.5)
{
    Volume::MaskData data(voxel_count(dims));
    for (auto& v : data)
        v = rng.uniform() < p ? 1 : 0;
    return {geometry(dims), std::move(data)};
}

inline Volume mask_from(Dims dims, const std::vector<std::uint8_t>& values)
{
    return {geometry(dims), Volume::MaskData(values)};
}

inline Volume real_from(Dims dims, const std::vector<float>& values)
{
    return {geometry(dims), Volume::RealData(values)};
}

inline Dims random_dims(Rng& rng, std::size_t lo, std::size_t hi)
{
    return {static_cast<std::size_t>(rng.integer(lo, hi)), static_cast<std::size_t>(rng.integer(lo, hi)),
            static_cast<std::size_t>(rng.integer(lo, hi))};
}

} // namespace segroute::testing
