#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segroute/pipeline.hpp"
#include "segroute/preprocess.hpp"

namespace segroute::cli {

/// Parsed `run` configuration. Relative paths resolve against the config
/// file's directory.
struct RunConfig {
    std::filesystem::path manifest;
    nlohmann::json classifier;            ///< {"type": "linear"|"oracle"|"external", ...}
    std::map<ClassLabel, nlohmann::json> segmenters;
    std::optional<nlohmann::json> generic;
    std::uint64_t seed = 0;
    std::filesystem::path output_directory;
    double alpha = 0.05;
    WindowSpec window;
    AugmentSpec augmentation;
    std::filesystem::path base_directory; ///< config file's directory
};

/// Throws ValidationError for malformed or inconsistent documents.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_directory);
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds a segmenter from a config entry. `name` is the registry key, used
/// as the built-in model name when the entry does not give one.
std::shared_ptr<const Segmenter> make_segmenter(const nlohmann::json& entry, const std::string& name,
                                                const std::filesystem::path& base_directory);

/// Runs one command line. `args` excludes the program name. Returns the exit
/// status: 0 only when the command succeeded and no scan failed.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace segroute::cli
