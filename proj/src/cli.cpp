#include "segroute/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "segroute/error.hpp"
#include "segroute/external_model.hpp"
#include "segroute/kernels.hpp"
#include "segroute/metrics.hpp"
#include "segroute/occlusion.hpp"
#include "segroute/phantom.hpp"
#include "segroute/stats.hpp"
#include "segroute/svol.hpp"

namespace segroute::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("cannot open {}", path.string()));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text))
        throw Error(fmt::format("cannot write {}", path.string()));
}

Dims parse_dims(const std::string& text)
{
    std::vector<std::size_t> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || v == 0)
            throw ValidationError(fmt::format("bad dimension list '{}'", text));
        parts.push_back(static_cast<std::size_t>(v));
    }
    if (parts.size() == 1)
        return {parts[0], parts[0], parts[0]};
    if (parts.size() == 3)
        return {parts[0], parts[1], parts[2]};
    throw ValidationError(fmt::format("bad dimension list '{}' (expected N or NX,NY,NZ)", text));
}

std::uint64_t default_seed()
{
    const char* env = std::getenv("SEGROUTE_SEED");
    if (!env || !*env)
        return 0;
    try {
        std::size_t used = 0;
        auto v = std::stoull(env, &used);
        if (used == std::string_view(env).size())
            return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(fmt::format("SEGROUTE_SEED is not an unsigned integer: '{}'", env));
}

std::array<bool, 3> parse_flip_axes(const std::vector<std::string>& names)
{
    std::array<bool, 3> out{};
    for (const auto& n : names) {
        if (n == "i")
            out[0] = true;
        else if (n == "j")
            out[1] = true;
        else if (n == "k")
            out[2] = true;
        else
            throw ValidationError(fmt::format("unknown flip axis '{}' (expected i, j or k)", n));
    }
    return out;
}

ClassWeights parse_class_weights(const std::vector<std::string>& items)
{
    if (items.empty())
        return default_class_weights();
    ClassWeights w;
    for (const auto& item : items) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ValidationError(fmt::format("bad class weight '{}' (expected LABEL=WEIGHT)", item));
        double value = 0.0;
        try {
            value = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ValidationError(fmt::format("bad class weight '{}'", item));
        }
        w[item.substr(0, eq)] = value;
    }
    return w;
}

ExternalModelSpec external_spec(const json& entry, const fs::path& base)
{
    ExternalModelSpec spec;
    spec.command = entry.at("command").get<std::vector<std::string>>();
    if (spec.command.empty())
        throw ValidationError("external model command is empty");
    if (entry.contains("working_directory"))
        spec.working_directory = resolve(base, entry.at("working_directory").get<std::string>());
    if (entry.contains("labels"))
        spec.labels = entry.at("labels").get<std::vector<std::string>>();
    if (entry.contains("timeout_ms"))
        spec.timeout = std::chrono::milliseconds(entry.at("timeout_ms").get<long>());
    return spec;
}

std::unique_ptr<Classifier> make_classifier(const RunConfig& cfg, std::span<const ScanRecord> data,
                                            const SegmenterRegistry& registry)
{
    const auto type = cfg.classifier.value("type", std::string());
    if (type == "linear") {
        auto doc = read_json_file(resolve(cfg.base_directory, cfg.classifier.at("model").get<std::string>()));
        return std::make_unique<LinearClassifier>(LinearClassifier::from_json(doc));
    }
    if (type == "oracle") {
        std::map<std::string, ClassLabel> truth;
        for (const auto& s : data)
            truth[s.id] = s.true_label;
        std::vector<ClassLabel> labels;
        for (const auto& [label, model] : registry.by_label)
            labels.push_back(label);
        return std::make_unique<OracleClassifier>(std::move(truth), std::move(labels));
    }
    if (type == "fixed")
        return std::make_unique<FixedClassifier>(
            ClassScores(cfg.classifier.at("scores").get<std::map<std::string, double>>()));
    if (type == "external") {
        auto spec = external_spec(cfg.classifier, cfg.base_directory);
        if (spec.labels.empty())
            throw ValidationError("external classifier needs a 'labels' list");
        return std::make_unique<ExternalClassifier>(std::make_shared<ExternalModelClient>(std::move(spec)));
    }
    throw ValidationError(fmt::format("unknown classifier type '{}'", type));
}

// Subcommands ---------------------------------------------------------------

struct PhantomArgs {
    std::string kind;
    std::size_t count = 0;
    std::optional<std::uint64_t> seed;
    std::string dims = "96";
    std::string out;
};

int cmd_phantom_gen(const PhantomArgs& a, std::ostream& out)
{
    PhantomSpec spec = PhantomSpec::defaults(parse_phantom_kind(a.kind));
    spec.dims = parse_dims(a.dims);
    auto records = generate_cohort(spec, a.count, a.seed.value_or(default_seed()));
    write_cohort(records, a.out);
    fmt::print(out, "wrote {} {} phantoms to {}\n", records.size(), a.kind, a.out);
    return 0;
}

struct TrainArgs {
    std::string manifest;
    std::vector<std::string> class_weights;
    int epochs = TrainOptions{}.epochs;
    double lr = TrainOptions{}.learning_rate;
    std::optional<std::uint64_t> seed;
    std::vector<int> rotations;
    std::vector<std::string> flips;
    int augment_copies = 0;
    std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out)
{
    const fs::path manifest = a.manifest;
    const auto entries = read_manifest(manifest);
    if (entries.empty())
        throw ValidationError(fmt::format("manifest {} lists no scans", a.manifest));
    if (a.augment_copies < 0)
        throw ValidationError("--augment-copies must be non-negative");

    AugmentSpec aug;
    aug.rotation_angles = a.rotations;
    aug.flip_axes = parse_flip_axes(a.flips);
    aug.seed = a.seed.value_or(default_seed());

    const std::size_t per_scan = 1 + static_cast<std::size_t>(a.augment_copies);
    std::vector<TrainingExample> examples(entries.size() * per_scan);
    kernels::for_each_index(entries.size(), [&](std::size_t n) {
        const auto& e = entries[n];
        Volume v = svol::read(resolve(manifest.parent_path(), e.volume));
        Volume pre = preprocess_for_classification(v);
        examples[n * per_scan] = {extract_features(pre), e.label};
        for (std::size_t c = 1; c < per_scan; ++c)
            examples[n * per_scan + c] = {extract_features(augment(pre, aug, fmt::format("{}#{}", e.id, c))),
                                          e.label};
    });

    TrainOptions opts;
    opts.class_weights = parse_class_weights(a.class_weights);
    opts.epochs = a.epochs;
    opts.learning_rate = a.lr;
    opts.seed = aug.seed;
    LinearClassifier model = train_linear_classifier(examples, opts);
    write_text(a.out, model.to_json().dump(2) + "\n");

    std::vector<double> scores;
    std::vector<bool> labels;
    for (std::size_t n = 0; n < entries.size(); ++n) {
        scores.push_back(model.positive_probability(examples[n * per_scan].features));
        labels.push_back(entries[n].label == model.positive_label());
    }
    fmt::print(out, "trained on {} examples; loss {:.6f}; training AUC ({}) {:.4f}\n", examples.size(),
               training_loss(model, examples, opts.class_weights), model.positive_label(), roc_auc(scores, labels));
    return 0;
}

struct RunArgs {
    std::string mode;
    std::string route;
    std::string config;
    std::string out;
    std::string jsonl;
};

void print_run_summary(std::span<const RoutingResult> results, const std::vector<ClassLabel>& labels,
                       std::ostream& out)
{
    for (const auto& [category, rows] : categorize(results)) {
        double sum = 0.0;
        std::size_t ok = 0;
        for (const auto& r : rows)
            if (r.ok()) {
                sum += r.dice;
                ++ok;
            }
        fmt::print(out, "{:<14} n={:<4} mean dice {}\n", category, rows.size(),
                   ok ? fmt::format("{:.4f}", sum / static_cast<double>(ok)) : std::string("n/a"));
    }
    if (labels.size() != 2)
        return;
    // Scores exist only for classified scans.
    const ClassLabel& positive = labels[1];
    std::vector<double> scores;
    std::vector<bool> truth;
    ConfusionCounts c;
    for (const auto& r : results) {
        if (r.scores.empty())
            continue;
        scores.push_back(r.scores.at(positive));
        bool pos = r.true_label == positive;
        bool pred = r.predicted_label == positive;
        truth.push_back(pos);
        c.tp += pos && pred;
        c.fn += pos && !pred;
        c.fp += !pos && pred;
        c.tn += !pos && !pred;
    }
    if (scores.empty())
        return;
    fmt::print(out, "classified {} scans: accuracy {:.4f}", scores.size(), accuracy(c));
    try {
        fmt::print(out, ", AUC ({}) {:.4f}", positive, roc_auc(scores, truth));
    } catch (const Error&) {
    }
    fmt::print(out, "\n");
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err)
{
    RunConfig cfg = load_run_config(a.config);
    auto data = load_manifest(cfg.manifest);

    SegmenterRegistry registry;
    for (const auto& [label, entry] : cfg.segmenters)
        registry.by_label[label] = make_segmenter(entry, label, cfg.base_directory);
    if (cfg.generic)
        registry.generic = make_segmenter(*cfg.generic, kGenericModel, cfg.base_directory);

    PipelineOptions options;
    options.window = cfg.window;

    std::vector<RoutingResult> results;
    std::vector<ClassLabel> labels;
    if (a.mode == "adaptive") {
        auto classifier = make_classifier(cfg, data, registry);
        labels = classifier->labels();
        std::sort(labels.begin(), labels.end());
        results = run_adaptive(*classifier, registry, data, options);
    } else if (a.mode == "generic") {
        results = run_generic(registry, data, options);
    } else if (a.mode == "optimal") {
        results = run_optimal(registry, data, options);
    } else if (a.mode == "fixed") {
        if (a.route.empty())
            throw ValidationError("--mode fixed needs --route LABEL");
        results = run_fixed_route(registry, a.route, data, options);
    } else {
        throw ValidationError(fmt::format("unknown mode '{}'", a.mode));
    }

    fs::path csv_path = a.out;
    if (csv_path.empty())
        csv_path = resolve(cfg.output_directory, fmt::format("results_{}.csv", a.mode));
    fs::path jsonl_path = a.jsonl.empty() ? fs::path(csv_path).replace_extension(".jsonl") : fs::path(a.jsonl);
    write_text(csv_path, results_csv(results));
    write_text(jsonl_path, results_jsonl(results));

    print_run_summary(results, labels, out);
    std::size_t failures = 0;
    for (const auto& r : results)
        if (!r.ok()) {
            ++failures;
            fmt::print(err, "scan {} failed: {}\n", r.id, r.error);
        }
    if (failures) {
        fmt::print(err, "{} of {} scans failed\n", failures, results.size());
        return 1;
    }
    return 0;
}

struct CompareArgs {
    std::string a, b, out;
    double alpha = 0.05;
    std::string group_by = "category";
};

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err)
{
    auto a = read_results_csv(args.a);
    auto b = read_results_csv(args.b);
    std::map<std::string, std::string> group;
    std::vector<ScoredItem> sa, sb;
    std::size_t failures = 0;
    for (auto* side : {&a, &b})
        for (const auto& r : *side)
            if (!r.ok()) {
                ++failures;
                fmt::print(err, "{}: scan {} has no dice\n", side == &a ? args.a : args.b, r.id);
            }
    if (failures)
        throw ValidationError("cannot compare results containing failed scans");
    for (const auto& r : a) {
        sa.push_back({r.id, r.dice});
        group[r.id] = args.group_by == "category" ? r.category : r.true_label;
    }
    for (const auto& r : b)
        sb.push_back({r.id, r.dice});
    auto report = compare_methods(sa, sb, [&](const std::string& id) { return group.at(id); }, args.alpha);
    const std::string csv = to_csv(report);
    write_text(args.out, csv);
    out << csv;
    return 0;
}

struct OcclusionArgs {
    std::string model, volume, out, csv, target;
    std::string patch = "16";
    std::string stride = "8";
    double fill = 0.0;
};

int cmd_occlusion(const OcclusionArgs& a, std::ostream& out)
{
    auto model = LinearClassifier::from_json(read_json_file(a.model));
    Volume v = svol::read(a.volume);
    Volume input = v.kind() == PayloadKind::HU ? preprocess_for_classification(v) : v;
    OcclusionSpec spec;
    spec.patch = parse_dims(a.patch);
    spec.stride = parse_dims(a.stride);
    spec.fill_value = a.fill;
    spec.target_class = a.target.empty() ? model.positive_label() : a.target;
    auto result = occlusion_map(model, input, spec);
    svol::write(result.map, a.out);
    if (!a.csv.empty())
        write_text(a.csv, occlusion_csv(result));
    fmt::print(out, "{} patches; map written to {}\n", result.anchors.size(), a.out);
    return 0;
}

nlohmann::ordered_json boxplot_json(const std::vector<double>& values)
{
    auto b = boxplot_summary(values);
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["n"] = b.n;
    j["mean"] = b.mean;
    j["min"] = b.min;
    j["q1"] = b.q1;
    j["median"] = b.median;
    j["q3"] = b.q3;
    j["max"] = b.max;
    j["outliers"] = b.outliers;
    return j;
}

struct ReportArgs {
    std::vector<std::string> results;
    std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out)
{
    auto inputs = nlohmann::ordered_json::array();
    std::size_t failures = 0;
    for (const auto& path : a.results) {
        auto rows = read_results_csv(path);
        std::vector<double> all;
        std::map<std::string, std::vector<double>> by_category;
        std::size_t failed = 0;
        for (const auto& r : rows) {
            if (!r.ok()) {
                ++failed;
                continue;
            }
            all.push_back(r.dice);
            by_category[r.category].push_back(r.dice);
        }
        failures += failed;
        nlohmann::ordered_json entry;
        entry["results"] = path;
        entry["failures"] = failed;
        entry["overall"] = all.empty() ? nlohmann::ordered_json(nullptr) : boxplot_json(all);
        auto cats = nlohmann::ordered_json::object();
        for (const auto& [c, values] : by_category)
            cats[c] = boxplot_json(values);
        entry["categories"] = cats;
        inputs.push_back(entry);
    }
    nlohmann::ordered_json doc;
    doc["inputs"] = inputs;
    write_text(a.out, doc.dump(2) + "\n");
    fmt::print(out, "summary of {} result file(s) written to {}\n", a.results.size(), a.out);
    return failures ? 1 : 0;
}

} // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base_directory)
{
    try {
        RunConfig cfg;
        cfg.base_directory = base_directory;
        cfg.manifest = resolve(base_directory, doc.at("manifest").get<std::string>());
        cfg.classifier = doc.value("classifier", json{{"type", "oracle"}});
        if (!cfg.classifier.is_object() || !cfg.classifier.contains("type"))
            throw ValidationError("'classifier' must be an object with a 'type'");
        for (const auto& [label, entry] : doc.at("segmenters").items())
            cfg.segmenters[label] = entry;
        if (cfg.segmenters.empty())
            throw ValidationError("'segmenters' must name at least one model");
        if (doc.contains("generic"))
            cfg.generic = doc.at("generic");
        cfg.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("output_dir"))
            cfg.output_directory = resolve(base_directory, doc.at("output_dir").get<std::string>());
        cfg.alpha = doc.value("alpha", 0.05);
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
            throw ValidationError(fmt::format("alpha must lie in (0, 1), got {}", cfg.alpha));
        if (doc.contains("window")) {
            cfg.window.level = doc.at("window").value("level", cfg.window.level);
            cfg.window.width = doc.at("window").value("width", cfg.window.width);
            if (!(cfg.window.width > 0.0))
                throw ValidationError("window width must be positive");
        }
        if (doc.contains("augmentation")) {
            const auto& aug = doc.at("augmentation");
            cfg.augmentation.rotation_angles = aug.value("rotation_angles", std::vector<int>{});
            cfg.augmentation.flip_axes = parse_flip_axes(aug.value("flip_axes", std::vector<std::string>{}));
            cfg.augmentation.seed = aug.value("seed", cfg.seed);
        }
        if (!fs::exists(cfg.manifest))
            throw ValidationError(fmt::format("manifest {} does not exist", cfg.manifest.string()));
        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("invalid run config: {}", e.what()));
    }
}

RunConfig load_run_config(const fs::path& path)
{
    return parse_run_config(read_json_file(path), path.parent_path());
}

std::shared_ptr<const Segmenter> make_segmenter(const json& entry, const std::string& name, const fs::path& base)
{
    try {
        const auto type = entry.at("type").get<std::string>();
        if (type == "builtin")
            return std::make_shared<ThresholdSegmenter>(builtin_segmenter_spec(entry.value("name", name)));
        if (type == "threshold")
            return std::make_shared<ThresholdSegmenter>(ThresholdSegmenter::from_json(entry));
        if (type == "external")
            return std::make_shared<ExternalSegmenter>(
                std::make_shared<ExternalModelClient>(external_spec(entry, base)));
        throw ValidationError(fmt::format("unknown segmenter type '{}' for '{}'", type, name));
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("invalid segmenter entry '{}': {}", name, e.what()));
    }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Classification-routed segmentation experiments"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs,-j", jobs, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

    PhantomArgs pa;
    auto* phantom = app.add_subcommand("phantom-gen", "Generate a synthetic phantom cohort");
    phantom->add_option("--kind", pa.kind, "PLD or MCC")->required();
    phantom->add_option("--count", pa.count, "Number of phantoms")->required()->check(CLI::PositiveNumber);
    phantom->add_option("--seed", pa.seed, "Base seed (default: $SEGROUTE_SEED or 0)");
    phantom->add_option("--dims", pa.dims, "N or NX,NY,NZ")->capture_default_str();
    phantom->add_option("--out", pa.out, "Output directory")->required();

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train the reference linear classifier");
    train->add_option("--manifest", ta.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
    train->add_option("--class-weight", ta.class_weights, "LABEL=WEIGHT (repeatable; default PLD=4 MCC=1)");
    train->add_option("--epochs", ta.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--lr", ta.lr, "Learning rate")->capture_default_str();
    train->add_option("--seed", ta.seed, "Augmentation seed (default: $SEGROUTE_SEED or 0)");
    train->add_option("--rotations", ta.rotations, "Rotation angles for augmentation")->delimiter(',');
    train->add_option("--flip", ta.flips, "Axes to flip at random: i, j, k")->delimiter(',');
    train->add_option("--augment-copies", ta.augment_copies, "Augmented copies per scan")->capture_default_str();
    train->add_option("--out", ta.out, "Model JSON")->required();

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Run a routing experiment");
    run->add_option("--mode", ra.mode)->required()->check(CLI::IsMember({"adaptive", "generic", "optimal", "fixed"}));
    run->add_option("--route", ra.route, "Model label for --mode fixed");
    run->add_option("--config", ra.config, "Run config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", ra.out, "Results CSV (default: <output_dir>/results_<mode>.csv)");
    run->add_option("--jsonl", ra.jsonl, "Results JSON lines (default: next to the CSV)");

    CompareArgs ca;
    auto* compare = app.add_subcommand("compare", "Paired signed-rank comparison of two result files");
    compare->add_option("--a", ca.a)->required()->check(CLI::ExistingFile);
    compare->add_option("--b", ca.b)->required()->check(CLI::ExistingFile);
    compare->add_option("--out", ca.out)->required();
    compare->add_option("--alpha", ca.alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    compare->add_option("--group-by", ca.group_by)
        ->capture_default_str()
        ->check(CLI::IsMember({"category", "true_label"}));

    OcclusionArgs oa;
    auto* occlusion = app.add_subcommand("occlusion", "Occlusion sensitivity map for a linear model");
    occlusion->add_option("--model", oa.model)->required()->check(CLI::ExistingFile);
    occlusion->add_option("--volume", oa.volume)->required()->check(CLI::ExistingFile);
    occlusion->add_option("--patch", oa.patch, "N or NX,NY,NZ")->capture_default_str();
    occlusion->add_option("--stride", oa.stride, "N or NX,NY,NZ")->capture_default_str();
    occlusion->add_option("--fill", oa.fill)->capture_default_str();
    occlusion->add_option("--target", oa.target, "Target label (default: the model's positive label)");
    occlusion->add_option("--out", oa.out, "Map SVOL")->required();
    occlusion->add_option("--csv", oa.csv, "Per-patch deltas CSV");

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "Per-category boxplot data");
    report->add_option("--results", rep.results)->required()->check(CLI::ExistingFile);
    report->add_option("--out", rep.out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (jobs > 0)
            kernels::set_thread_count(jobs);
        if (phantom->parsed())
            return cmd_phantom_gen(pa, out);
        if (train->parsed())
            return cmd_train(ta, out);
        if (run->parsed())
            return cmd_run(ra, out, err);
        if (compare->parsed())
            return cmd_compare(ca, out, err);
        if (occlusion->parsed())
            return cmd_occlusion(oa, out);
        if (report->parsed())
            return cmd_report(rep, out);
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 1;
    }
    return 1;
}

} // namespace segroute::cli
