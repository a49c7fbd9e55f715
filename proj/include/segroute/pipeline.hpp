#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segroute/models.hpp"
#include "segroute/phantom.hpp"
#include "segroute/preprocess.hpp"

namespace segroute {

/// One segmentation model per label, plus an optional generic model.
struct SegmenterRegistry {
    std::map<ClassLabel, std::shared_ptr<const Segmenter>> by_label;
    std::shared_ptr<const Segmenter> generic;

    /// Throws ValidationError when no model is registered for `label`.
    const Segmenter& route(const ClassLabel& label) const;
};

/// Label used as the "model" half of the category in generic runs.
inline constexpr const char* kGenericModel = "generic";

struct RoutingResult {
    std::string id;
    ClassLabel true_label;
    ClassLabel predicted_label;
    ClassScores scores;
    std::string category; ///< "<true>-><model used>"
    double dice = 0.0;
    std::string error;          ///< non-empty for a failed scan
    std::optional<Volume> mask; ///< kept when PipelineOptions::keep_masks is set

    bool ok() const { return error.empty(); }
};

struct PipelineOptions {
    WindowSpec window;
    Dims classifier_dims = kClassifierDims;
    bool keep_masks = false;
    bool parallel = true; ///< process scans concurrently
};

/// Classify, route by argmax score, segment the windowed full-resolution
/// scan with the routed model and score it against the ground truth.
/// Per-scan failures become rows with `error` set. Results are sorted by id.
std::vector<RoutingResult> run_adaptive(const Classifier& classifier, const SegmenterRegistry& registry,
                                        std::span<const ScanRecord> data, const PipelineOptions& options = {});

/// Every scan through registry.generic; category "<true>->generic".
std::vector<RoutingResult> run_generic(const SegmenterRegistry& registry, std::span<const ScanRecord> data,
                                       const PipelineOptions& options = {});
std::vector<RoutingResult> run_generic(const Segmenter& generic, std::span<const ScanRecord> data,
                                       const PipelineOptions& options = {});

/// Routes by ground-truth label.
std::vector<RoutingResult> run_optimal(const SegmenterRegistry& registry, std::span<const ScanRecord> data,
                                       const PipelineOptions& options = {});

/// Routes every scan to the model registered for `label`, regardless of its
/// pathology. Used for correct-versus-incorrect model comparisons.
std::vector<RoutingResult> run_fixed_route(const SegmenterRegistry& registry, const ClassLabel& label,
                                           std::span<const ScanRecord> data, const PipelineOptions& options = {});

/// Partition by category.
std::map<std::string, std::vector<RoutingResult>> categorize(std::span<const RoutingResult> results);

/// CSV with header id,true_label,predicted_label,category,dice. Failed scans
/// have an empty dice field.
std::string results_csv(std::span<const RoutingResult> results);
/// JSON lines mirror including scores and errors.
std::string results_jsonl(std::span<const RoutingResult> results);
std::vector<RoutingResult> parse_results_csv(const std::string& text);
std::vector<RoutingResult> read_results_csv(const std::filesystem::path& path);

} // namespace segroute
