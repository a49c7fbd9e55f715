#include "segroute/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "segroute/error.hpp"
#include "segroute/metrics.hpp"

namespace segroute {

const Segmenter& SegmenterRegistry::route(const ClassLabel& label) const
{
    auto it = by_label.find(label);
    if (it == by_label.end() || !it->second)
        throw ValidationError(fmt::format("no segmentation model registered for label '{}'", label));
    return *it->second;
}

namespace {

/// Decides, for one scan, which model to use. Returns the predicted label
/// (empty when not applicable), the scores, the model label and the model.
struct Route {
    ClassLabel predicted;
    ClassScores scores;
    std::string model_name;
    const Segmenter* model = nullptr;
};

using RouteFn = std::function<Route(const ScanRecord&)>;

RoutingResult process_scan(const ScanRecord& scan, const RouteFn& route, const PipelineOptions& options)
{
    RoutingResult r;
    r.id = scan.id;
    r.true_label = scan.true_label;
    try {
        Route decision = route(scan);
        r.predicted_label = decision.predicted;
        r.scores = decision.scores;
        r.category = scan.true_label + "->" + decision.model_name;
        Volume mask = decision.model->segment(window(scan.volume, options.window));
        if (mask.kind() != PayloadKind::Mask)
            throw GeometryError("segmenter returned a non-mask volume");
        require_same_dims(mask, scan.truth_mask, scan.id);
        r.dice = dice(mask, scan.truth_mask);
        if (options.keep_masks)
            r.mask = std::move(mask);
    } catch (const std::exception& e) {
        r.error = e.what();
        if (r.category.empty())
            r.category = scan.true_label + "->?";
    }
    return r;
}

std::vector<RoutingResult> run(std::span<const ScanRecord> data, const RouteFn& route, const PipelineOptions& options)
{
    std::vector<RoutingResult> results(data.size());
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    if (options.parallel) {
        // process_scan never throws; failures are recorded in the row.
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t x = 0; x < n; ++x)
            results[x] = process_scan(data[x], route, options);
    } else {
        for (std::ptrdiff_t x = 0; x < n; ++x)
            results[x] = process_scan(data[x], route, options);
    }
    std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return results;
}

} // namespace

std::vector<RoutingResult> run_adaptive(const Classifier& classifier, const SegmenterRegistry& registry,
                                        std::span<const ScanRecord> data, const PipelineOptions& options)
{
    return run(
        data,
        [&](const ScanRecord& scan) {
            Route r;
            Volume input = preprocess_for_classification(scan.volume, options.window, options.classifier_dims);
            r.scores = classifier.classify(input, scan.id);
            r.predicted = r.scores.argmax();
            r.model_name = r.predicted;
            r.model = &registry.route(r.predicted);
            return r;
        },
        options);
}

std::vector<RoutingResult> run_generic(const Segmenter& generic, std::span<const ScanRecord> data,
                                       const PipelineOptions& options)
{
    return run(
        data,
        [&](const ScanRecord&) {
            Route r;
            r.model_name = kGenericModel;
            r.model = &generic;
            return r;
        },
        options);
}

std::vector<RoutingResult> run_generic(const SegmenterRegistry& registry, std::span<const ScanRecord> data,
                                       const PipelineOptions& options)
{
    if (!registry.generic)
        throw ValidationError("registry has no generic segmentation model");
    return run_generic(*registry.generic, data, options);
}

std::vector<RoutingResult> run_optimal(const SegmenterRegistry& registry, std::span<const ScanRecord> data,
                                       const PipelineOptions& options)
{
    return run(
        data,
        [&](const ScanRecord& scan) {
            Route r;
            r.predicted = scan.true_label;
            r.model_name = scan.true_label;
            r.model = &registry.route(scan.true_label);
            return r;
        },
        options);
}

std::vector<RoutingResult> run_fixed_route(const SegmenterRegistry& registry, const ClassLabel& label,
                                           std::span<const ScanRecord> data, const PipelineOptions& options)
{
    const Segmenter& model = registry.route(label);
    return run(
        data,
        [&](const ScanRecord&) {
            Route r;
            r.model_name = label;
            r.model = &model;
            return r;
        },
        options);
}

std::map<std::string, std::vector<RoutingResult>> categorize(std::span<const RoutingResult> results)
{
    std::map<std::string, std::vector<RoutingResult>> out;
    for (const auto& r : results)
        out[r.category].push_back(r);
    return out;
}

std::string results_csv(std::span<const RoutingResult> results)
{
    std::string out = "id,true_label,predicted_label,category,dice\n";
    for (const auto& r : results) {
        if (r.ok())
            out += fmt::format("{},{},{},{},{:.17g}\n", r.id, r.true_label, r.predicted_label, r.category, r.dice);
        else
            out += fmt::format("{},{},{},{},\n", r.id, r.true_label, r.predicted_label, r.category);
    }
    return out;
}

std::string results_jsonl(std::span<const RoutingResult> results)
{
    std::string out;
    for (const auto& r : results) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["true_label"] = r.true_label;
        j["predicted_label"] = r.predicted_label;
        j["category"] = r.category;
        j["scores"] = r.scores.probabilities();
        if (r.ok())
            j["dice"] = r.dice;
        else
            j["error"] = r.error;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<RoutingResult> parse_results_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "id,true_label,predicted_label,category,dice")
        throw ValidationError("results CSV lacks the expected header");
    std::vector<RoutingResult> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        if (!line.empty() && line.back() == ',')
            fields.emplace_back();
        if (fields.size() != 5)
            throw ValidationError(fmt::format("results CSV line {}: expected 5 fields", line_no));
        RoutingResult r;
        r.id = fields[0];
        r.true_label = fields[1];
        r.predicted_label = fields[2];
        r.category = fields[3];
        if (fields[4].empty()) {
            r.error = "failed";
        } else {
            try {
                std::size_t used = 0;
                r.dice = std::stod(fields[4], &used);
                if (used != fields[4].size())
                    throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ValidationError(fmt::format("results CSV line {}: bad dice '{}'", line_no, fields[4]));
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RoutingResult> read_results_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open results file {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_results_csv(ss.str());
}

} // namespace segroute
