#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "segroute/volume.hpp"

namespace segroute {

/// One dataset entry: an HU scan, its ground-truth liver mask and pathology label.
struct ScanRecord {
    std::string id;
    Volume volume;
    Volume truth_mask;
    std::string true_label;
};

enum class PhantomKind { PLD, MCC };

std::string to_string(PhantomKind kind);
PhantomKind parse_phantom_kind(std::string_view name);

/// Synthetic liver CT. PLD-like phantoms carry many small cysts, MCC-like
/// phantoms a few larger lesions; both sit fully inside a super-ellipsoid
/// liver on a -1000 HU background.
struct PhantomSpec {
    PhantomKind kind = PhantomKind::PLD;
    Dims dims{96, 96, 96};
    std::uint64_t seed = 0;
    std::pair<int, int> cyst_count_range{15, 40};
    std::pair<int, int> lesion_count_range{1, 6};
    std::pair<double, double> cyst_radius_range{2.0, 5.0};   ///< voxels
    std::pair<double, double> lesion_radius_range{3.0, 8.0}; ///< voxels
    double parenchyma_hu = 60.0;
    double cyst_hu = 5.0;
    double lesion_hu = 35.0;
    double background_hu = -1000.0;
    double noise_sd = 8.0;
    Spacing spacing{1.5, 1.5, 1.5};
    Orientation orientation = Orientation::ras();

    static PhantomSpec defaults(PhantomKind kind, std::uint64_t seed = 0);
};

/// Deterministic in the spec. Throws ValidationError for an invalid spec and
/// GenerationError when an inclusion cannot be placed inside the liver.
ScanRecord generate_phantom(const PhantomSpec& spec, std::string id);

/// `count` phantoms of `base`'s kind; scan n uses seed base_seed ^ n and id
/// "<kind>-<n>". Generated in parallel; output does not depend on thread count.
std::vector<ScanRecord> generate_cohort(const PhantomSpec& base, std::size_t count, std::uint64_t base_seed);

// Manifest: one JSON object per line, {"id","label","volume","mask"}; paths
// are relative to the manifest's directory unless absolute.

struct ManifestEntry {
    std::string id;
    std::string label;
    std::filesystem::path volume;
    std::filesystem::path mask;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Writes <id>.svol and <id>_mask.svol into `dir` and merges the records into
/// dir/manifest.jsonl (entries sorted by id, same ids replaced).
void write_cohort(const std::vector<ScanRecord>& records, const std::filesystem::path& dir);

/// Loads every scan listed in a manifest.
std::vector<ScanRecord> load_manifest(const std::filesystem::path& manifest);

} // namespace segroute
