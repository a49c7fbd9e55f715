#include "segroute/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "segroute/error.hpp"
#include "segroute/rng.hpp"
#include "segroute/svol.hpp"

namespace segroute {

namespace {

struct Liver {
    std::array<double, 3> center{};
    std::array<double, 3> semi_axes{};
    double exponent = 2.0;

    bool contains(double x, double y, double z) const
    {
        const std::array<double, 3> p{x, y, z};
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
            s += std::pow(std::abs(p[a] - center[a]) / semi_axes[a], exponent);
        return s <= 1.0;
    }
};

struct Sphere {
    std::array<double, 3> center{};
    double radius = 0.0;
};

/// Inclusive voxel bounds of a sphere, clipped to the grid. False when it
/// pokes outside the grid.
bool sphere_bounds(const Sphere& s, const Dims& d, std::array<std::size_t, 3>& lo, std::array<std::size_t, 3>& hi)
{
    for (int a = 0; a < 3; ++a) {
        double l = std::ceil(s.center[a] - s.radius);
        double h = std::floor(s.center[a] + s.radius);
        if (l < 0.0 || h > static_cast<double>(d[a]) - 1.0)
            return false;
        lo[a] = static_cast<std::size_t>(l);
        hi[a] = static_cast<std::size_t>(h);
    }
    return true;
}

template <typename Fn>
void for_each_sphere_voxel(const Sphere& s, const std::array<std::size_t, 3>& lo, const std::array<std::size_t, 3>& hi,
                           Fn&& fn)
{
    const double r2 = s.radius * s.radius;
    for (std::size_t k = lo[2]; k <= hi[2]; ++k)
        for (std::size_t j = lo[1]; j <= hi[1]; ++j)
            for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
                double dx = static_cast<double>(i) - s.center[0];
                double dy = static_cast<double>(j) - s.center[1];
                double dz = static_cast<double>(k) - s.center[2];
                if (dx * dx + dy * dy + dz * dz <= r2)
                    fn(i, j, k);
            }
}

void validate(const PhantomSpec& s)
{
    for (std::size_t d : s.dims)
        if (d < 16)
            throw ValidationError("phantom dims must be at least 16 per axis");
    auto check_range = [](std::pair<int, int> r, const char* what) {
        if (r.first < 0 || r.second < r.first)
            throw ValidationError(fmt::format("invalid {} range [{}, {}]", what, r.first, r.second));
    };
    check_range(s.cyst_count_range, "cyst count");
    check_range(s.lesion_count_range, "lesion count");
    auto check_radius = [](std::pair<double, double> r, const char* what) {
        if (!(r.first > 0.0) || r.second < r.first)
            throw ValidationError(fmt::format("invalid {} radius range", what));
    };
    check_radius(s.cyst_radius_range, "cyst");
    check_radius(s.lesion_radius_range, "lesion");
    if (!(s.noise_sd >= 0.0))
        throw ValidationError("noise_sd must be non-negative");
}

} // namespace

std::string to_string(PhantomKind kind) { return kind == PhantomKind::PLD ? "PLD" : "MCC"; }

PhantomKind parse_phantom_kind(std::string_view name)
{
    if (name == "PLD")
        return PhantomKind::PLD;
    if (name == "MCC")
        return PhantomKind::MCC;
    throw ValidationError(fmt::format("unknown phantom kind '{}' (expected PLD or MCC)", name));
}

PhantomSpec PhantomSpec::defaults(PhantomKind kind, std::uint64_t seed)
{
    PhantomSpec s;
    s.kind = kind;
    s.seed = seed;
    return s;
}

ScanRecord generate_phantom(const PhantomSpec& spec, std::string id)
{
    validate(spec);
    const Dims& d = spec.dims;
    Rng rng(spec.seed);

    Liver liver;
    for (int a = 0; a < 3; ++a) {
        const auto n = static_cast<double>(d[a]);
        liver.center[a] = (n - 1.0) / 2.0 + rng.uniform(-0.05, 0.05) * n;
        liver.semi_axes[a] = rng.uniform(0.28, 0.38) * n;
    }
    liver.exponent = rng.uniform(1.8, 2.6);

    const bool pld = spec.kind == PhantomKind::PLD;
    const auto count_range = pld ? spec.cyst_count_range : spec.lesion_count_range;
    const auto radius_range = pld ? spec.cyst_radius_range : spec.lesion_radius_range;
    const double inclusion_hu = pld ? spec.cyst_hu : spec.lesion_hu;
    const auto count = rng.integer(count_range.first, count_range.second);

    std::vector<double> base(voxel_count(d), spec.background_hu);
    Volume::MaskData mask(voxel_count(d), 0);
    auto index = [&](std::size_t i, std::size_t j, std::size_t k) { return i + d[0] * (j + d[1] * k); };
    for (std::size_t k = 0; k < d[2]; ++k)
        for (std::size_t j = 0; j < d[1]; ++j)
            for (std::size_t i = 0; i < d[0]; ++i)
                if (liver.contains(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k))) {
                    base[index(i, j, k)] = spec.parenchyma_hu;
                    mask[index(i, j, k)] = 1;
                }

    constexpr int kMaxAttempts = 500;
    for (std::int64_t n = 0; n < count; ++n) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Sphere s;
            s.radius = rng.uniform(radius_range.first, radius_range.second);
            for (int a = 0; a < 3; ++a)
                s.center[a] = liver.center[a] + rng.uniform(-1.0, 1.0) * liver.semi_axes[a];
            std::array<std::size_t, 3> lo{}, hi{};
            if (!sphere_bounds(s, d, lo, hi))
                continue;
            bool inside = true;
            for_each_sphere_voxel(s, lo, hi, [&](std::size_t i, std::size_t j, std::size_t k) {
                inside = inside && mask[index(i, j, k)] == 1;
            });
            if (!inside)
                continue;
            for_each_sphere_voxel(s, lo, hi,
                                  [&](std::size_t i, std::size_t j, std::size_t k) { base[index(i, j, k)] = inclusion_hu; });
            placed = true;
        }
        if (!placed)
            throw GenerationError(
                fmt::format("could not place inclusion {} of {} inside the liver of '{}'", n + 1, count, id));
    }

    // Noise uses one stream per z-slice.
    Volume::HuData hu(voxel_count(d));
    const std::uint64_t noise_seed = splitmix64(spec.seed ^ 0x6E6F697365ull);
    const auto nz = static_cast<std::ptrdiff_t>(d[2]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < nz; ++k) {
        Rng noise(noise_seed + static_cast<std::uint64_t>(k));
        const std::size_t begin = static_cast<std::size_t>(k) * d[0] * d[1];
        for (std::size_t x = begin; x < begin + d[0] * d[1]; ++x) {
            double v = base[x] + (spec.noise_sd > 0.0 ? spec.noise_sd * noise.normal() : 0.0);
            hu[x] = static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
        }
    }

    Geometry g{d, spec.spacing, spec.orientation};
    return ScanRecord{std::move(id), Volume(g, std::move(hu)), Volume(g, std::move(mask)), to_string(spec.kind)};
}

std::vector<ScanRecord> generate_cohort(const PhantomSpec& base, std::size_t count, std::uint64_t base_seed)
{
    if (count == 0)
        throw ValidationError("cohort count must be at least 1");
    std::vector<std::optional<ScanRecord>> slots(count);
    std::exception_ptr error;
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t x = 0; x < n; ++x) {
        try {
            PhantomSpec spec = base;
            spec.seed = base_seed ^ static_cast<std::uint64_t>(x);
            slots[x] = generate_phantom(spec, fmt::format("{}-{}", to_string(base.kind), x));
        } catch (...) {
#pragma omp critical(segroute_cohort_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    std::vector<ScanRecord> out;
    out.reserve(count);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open manifest {}", path.string()));
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            entries.push_back({j.at("id").get<std::string>(), j.at("label").get<std::string>(),
                               j.at("volume").get<std::string>(), j.at("mask").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(fmt::format("{}:{}: bad manifest entry: {}", path.string(), line_no, e.what()));
        }
    }
    return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(fmt::format("cannot write manifest {}", path.string()));
    for (const auto& e : entries) {
        // ordered_json keeps the documented key order.
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["label"] = e.label;
        j["volume"] = e.volume.generic_string();
        j["mask"] = e.mask.generic_string();
        out << j.dump() << '\n';
    }
}

void write_cohort(const std::vector<ScanRecord>& records, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto manifest_path = dir / "manifest.jsonl";
    std::map<std::string, ManifestEntry> merged;
    if (std::filesystem::exists(manifest_path))
        for (auto& e : read_manifest(manifest_path))
            merged[e.id] = std::move(e);
    for (const auto& r : records) {
        const std::string volume_name = r.id + ".svol";
        const std::string mask_name = r.id + "_mask.svol";
        svol::write(r.volume, dir / volume_name);
        svol::write(r.truth_mask, dir / mask_name);
        merged[r.id] = {r.id, r.true_label, volume_name, mask_name};
    }
    std::vector<ManifestEntry> entries;
    for (auto& [id, e] : merged)
        entries.push_back(std::move(e));
    write_manifest(entries, manifest_path);
}

std::vector<ScanRecord> load_manifest(const std::filesystem::path& manifest)
{
    const auto base = manifest.parent_path();
    auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : base / p; };
    std::vector<ScanRecord> out;
    for (const auto& e : read_manifest(manifest)) {
        Volume v = svol::read(resolve(e.volume));
        Volume m = svol::read(resolve(e.mask));
        require_kind(v, PayloadKind::HU, e.id);
        require_kind(m, PayloadKind::Mask, e.id);
        require_same_dims(v, m, e.id);
        out.push_back({e.id, std::move(v), std::move(m), e.label});
    }
    return out;
}

} // namespace segroute
