#include "segroute/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "segroute/error.hpp"
#include "segroute/kernels.hpp"
#include "segroute/morphology.hpp"

namespace segroute {

namespace {

double sigmoid(double z)
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double label_weight(const ClassWeights& w, const ClassLabel& label)
{
    auto it = w.find(label);
    if (it == w.end())
        throw ValidationError(fmt::format("no class weight for label '{}'", label));
    return it->second;
}

} // namespace

// ClassScores ------------------------------------------------------------------

ClassScores::ClassScores(std::map<ClassLabel, double> probabilities) : probs_(std::move(probabilities))
{
    if (probs_.empty())
        throw ValidationError("class scores are empty");
    double total = 0.0;
    for (const auto& [label, p] : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ValidationError(fmt::format("score for '{}' is not a valid probability", label));
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError(fmt::format("class scores sum to {}, not 1", total));
}

ClassScores ClassScores::binary(const ClassLabel& negative, const ClassLabel& positive, double p_positive)
{
    return ClassScores({{negative, 1.0 - p_positive}, {positive, p_positive}});
}

double ClassScores::at(const ClassLabel& label) const
{
    auto it = probs_.find(label);
    if (it == probs_.end())
        throw ValidationError(fmt::format("no score for label '{}'", label));
    return it->second;
}

ClassLabel ClassScores::argmax() const
{
    if (probs_.empty())
        throw ValidationError("argmax of empty scores");
    // Map order is lexicographic and max_element keeps the first maximum.
    return std::max_element(probs_.begin(), probs_.end(),
                            [](const auto& a, const auto& b) { return a.second < b.second; })
        ->first;
}

// Features ------------------------------------------------------------------------

FeatureVector extract_features(const Volume& preprocessed)
{
    require_kind(preprocessed, PayloadKind::Real, "extract_features");
    auto stats = kernels::intensity_stats(preprocessed.real(), preprocessed.dims(), kHistogramBins);
    const auto n = static_cast<double>(stats.count);
    FeatureVector f{};
    for (std::size_t b = 0; b < kHistogramBins; ++b)
        f[b] = static_cast<double>(stats.histogram[b]) / n;
    const double mean = stats.sum / n;
    f[kHistogramBins] = mean;
    f[kHistogramBins + 1] = std::sqrt(std::max(0.0, stats.sum_squares / n - mean * mean));
    f[kHistogramBins + 2] = static_cast<double>(stats.foreground) / n;
    return f;
}

// LinearClassifier ----------------------------------------------------------------

LinearClassifier::LinearClassifier(ClassLabel negative, ClassLabel positive)
    : LinearClassifier(std::move(negative), std::move(positive), std::vector<double>(kFeatureLength, 0.0), 0.0)
{
}

LinearClassifier::LinearClassifier(ClassLabel negative, ClassLabel positive, std::vector<double> weights, double bias)
    : negative_(std::move(negative)), positive_(std::move(positive)), weights_(std::move(weights)), bias_(bias)
{
    if (negative_ == positive_)
        throw ValidationError("classifier labels must differ");
    if (weights_.size() != kFeatureLength)
        throw ValidationError(fmt::format("expected {} weights, got {}", kFeatureLength, weights_.size()));
    if (!std::isfinite(bias_) || !std::all_of(weights_.begin(), weights_.end(), [](double w) { return std::isfinite(w); }))
        throw ValidationError("classifier parameters must be finite");
}

double LinearClassifier::logit(const FeatureVector& f) const
{
    return std::inner_product(weights_.begin(), weights_.end(), f.begin(), bias_);
}

double LinearClassifier::positive_probability(const FeatureVector& f) const { return sigmoid(logit(f)); }

ClassScores LinearClassifier::scores(const FeatureVector& f) const
{
    return ClassScores::binary(negative_, positive_, positive_probability(f));
}

ClassScores LinearClassifier::classify(const Volume& preprocessed, std::string_view) const
{
    return scores(extract_features(preprocessed));
}

nlohmann::json LinearClassifier::to_json() const
{
    return {{"type", "linear"},
            {"feature_version", kFeatureVersion},
            {"labels", {negative_, positive_}},
            {"weights", weights_},
            {"bias", bias_}};
}

LinearClassifier LinearClassifier::from_json(const nlohmann::json& j)
{
    try {
        if (j.at("type").get<std::string>() != "linear")
            throw ValidationError("model type is not 'linear'");
        if (j.at("feature_version").get<int>() != kFeatureVersion)
            throw ValidationError("unsupported feature_version");
        auto labels = j.at("labels").get<std::vector<std::string>>();
        if (labels.size() != 2)
            throw ValidationError("linear model needs exactly two labels");
        return {labels[0], labels[1], j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("malformed linear model: {}", e.what()));
    }
}

// Training --------------------------------------------------------------------------

double weighted_cross_entropy(const LinearClassifier& m, const TrainingExample& e, const ClassWeights& w)
{
    const double z = m.logit(e.features);
    const double y = e.label == m.positive_label() ? 1.0 : 0.0;
    // -[y log s(z) + (1-y) log(1 - s(z))] = softplus(z) - y z
    return label_weight(w, e.label) * (softplus(z) - y * z);
}

double training_loss(const LinearClassifier& m, std::span<const TrainingExample> data, const ClassWeights& w)
{
    double loss = 0.0, total_weight = 0.0;
    for (const auto& e : data) {
        loss += weighted_cross_entropy(m, e, w);
        total_weight += label_weight(w, e.label);
    }
    return loss / total_weight;
}

LossGradient training_gradient(const LinearClassifier& m, std::span<const TrainingExample> data, const ClassWeights& w)
{
    LossGradient g{std::vector<double>(kFeatureLength, 0.0), 0.0};
    double total_weight = 0.0;
    for (const auto& e : data) {
        const double wi = label_weight(w, e.label);
        const double y = e.label == m.positive_label() ? 1.0 : 0.0;
        const double residual = wi * (m.positive_probability(e.features) - y);
        for (std::size_t q = 0; q < kFeatureLength; ++q)
            g.weights[q] += residual * e.features[q];
        g.bias += residual;
        total_weight += wi;
    }
    for (double& x : g.weights)
        x /= total_weight;
    g.bias /= total_weight;
    return g;
}

LinearClassifier train_linear_classifier(std::span<const TrainingExample> data, const TrainOptions& options)
{
    std::vector<ClassLabel> labels;
    for (const auto& e : data)
        labels.push_back(e.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.size() != 2)
        throw ValidationError(fmt::format("training needs exactly two labels, found {}", labels.size()));
    for (const auto& l : labels)
        if (!(label_weight(options.class_weights, l) > 0.0))
            throw ValidationError(fmt::format("class weight for '{}' must be positive", l));
    if (options.epochs < 0 || !(options.learning_rate > 0.0))
        throw ValidationError("epochs must be >= 0 and learning rate > 0");

    // Descent runs on standardized features; the histogram bins that separate
    // the classes hold a tiny share of the mass and barely move otherwise.
    // The fitted parameters are mapped back to raw-feature space at the end.
    std::array<double, kFeatureLength> mean{}, scale{};
    for (const auto& e : data)
        for (std::size_t q = 0; q < kFeatureLength; ++q)
            mean[q] += e.features[q];
    const auto n = static_cast<double>(data.size());
    for (auto& m : mean)
        m /= n;
    for (const auto& e : data)
        for (std::size_t q = 0; q < kFeatureLength; ++q)
            scale[q] += (e.features[q] - mean[q]) * (e.features[q] - mean[q]);
    for (auto& s : scale) {
        s = std::sqrt(s / n);
        if (!(s > 1e-12))
            s = 1.0;
    }
    std::vector<TrainingExample> standardized(data.begin(), data.end());
    for (auto& e : standardized)
        for (std::size_t q = 0; q < kFeatureLength; ++q)
            e.features[q] = (e.features[q] - mean[q]) / scale[q];

    // Parameters start at zero, so the seed has nothing to perturb yet.
    LinearClassifier model(labels[0], labels[1]);
    std::vector<double> weights(kFeatureLength, 0.0);
    double bias = 0.0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        auto g = training_gradient(model, standardized, options.class_weights);
        for (std::size_t q = 0; q < kFeatureLength; ++q)
            weights[q] -= options.learning_rate * g.weights[q];
        bias -= options.learning_rate * g.bias;
        model = LinearClassifier(labels[0], labels[1], weights, bias);
    }

    for (std::size_t q = 0; q < kFeatureLength; ++q) {
        weights[q] /= scale[q];
        bias -= weights[q] * mean[q];
    }
    return LinearClassifier(labels[0], labels[1], weights, bias);
}

// Oracle / fixed -------------------------------------------------------------------

OracleClassifier::OracleClassifier(std::map<std::string, ClassLabel> truth, std::vector<ClassLabel> labels)
    : truth_(truth.begin(), truth.end()), labels_(std::move(labels))
{
    std::sort(labels_.begin(), labels_.end());
}

ClassScores OracleClassifier::classify(const Volume&, std::string_view scan_id) const
{
    auto it = truth_.find(scan_id);
    if (it == truth_.end())
        throw ValidationError(fmt::format("oracle has no label for scan '{}'", scan_id));
    std::map<ClassLabel, double> probs;
    for (const auto& l : labels_)
        probs[l] = l == it->second ? 1.0 : 0.0;
    probs[it->second] = 1.0;
    return ClassScores(std::move(probs));
}

std::vector<ClassLabel> FixedClassifier::labels() const
{
    std::vector<ClassLabel> out;
    for (const auto& [l, p] : scores_.probabilities())
        out.push_back(l);
    return out;
}

// ThresholdSegmenter ----------------------------------------------------------------

ThresholdSegmenter::ThresholdSegmenter(ThresholdSegmenterSpec spec) : spec_(spec)
{
    if (!(spec_.lo >= 0.0f && spec_.lo < spec_.hi && spec_.hi <= 1.0f))
        throw ValidationError(fmt::format("include band ({}, {}) must satisfy 0 <= lo < hi <= 1", spec_.lo, spec_.hi));
    if (spec_.closing_radius < 0)
        throw ValidationError("closing radius must be non-negative");
}

Volume ThresholdSegmenter::segment(const Volume& windowed) const
{
    require_kind(windowed, PayloadKind::Real, "ThresholdSegmenter");
    Volume::MaskData raw(windowed.size());
    kernels::threshold_band(windowed.real(), spec_.lo, spec_.hi, raw);
    Volume mask = close_mask(windowed.with_payload(std::move(raw)), spec_.closing_radius);
    if (spec_.keep_largest_component) {
        if (count_foreground(mask) == 0)
            throw EmptyMaskError("segmentation is empty; no component to keep");
        mask = keep_largest_component(mask);
    }
    return mask;
}

nlohmann::json ThresholdSegmenter::to_json() const
{
    return {{"type", "threshold"},
            {"band", {spec_.lo, spec_.hi}},
            {"closing_radius", spec_.closing_radius},
            {"keep_largest", spec_.keep_largest_component}};
}

ThresholdSegmenter ThresholdSegmenter::from_json(const nlohmann::json& j)
{
    try {
        ThresholdSegmenterSpec s;
        auto band = j.at("band").get<std::vector<float>>();
        if (band.size() != 2)
            throw ValidationError("threshold band needs two values");
        s.lo = band[0];
        s.hi = band[1];
        s.closing_radius = j.value("closing_radius", 0);
        s.keep_largest_component = j.value("keep_largest", false);
        return ThresholdSegmenter(s);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("malformed threshold segmenter: {}", e.what()));
    }
}

ThresholdSegmenterSpec builtin_segmenter_spec(std::string_view name)
{
    // Windowed (180/440) phantom intensities: cyst 0.102, lesion 0.170,
    // parenchyma 0.227, noise sd 0.018.
    if (name == "PLD")
        return {0.03f, 0.25f, 1, true};
    if (name == "MCC")
        return {0.125f, 0.30f, 1, true};
    if (name == "generic")
        return {0.14f, 0.28f, 1, true};
    throw ValidationError(fmt::format("no built-in segmenter named '{}'", name));
}

} // namespace segroute
