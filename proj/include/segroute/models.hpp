#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segroute/volume.hpp"

namespace segroute {

using ClassLabel = std::string;

/// Per-class probabilities. Non-negative and summing to 1 within 1e-9.
class ClassScores {
public:
    ClassScores() = default;
    /// Throws ValidationError when the invariants do not hold.
    explicit ClassScores(std::map<ClassLabel, double> probabilities);
    static ClassScores binary(const ClassLabel& negative, const ClassLabel& positive, double p_positive);

    const std::map<ClassLabel, double>& probabilities() const { return probs_; }
    double at(const ClassLabel& label) const;
    bool empty() const { return probs_.empty(); }
    /// Highest-probability label; ties go to the lexicographically smallest label.
    ClassLabel argmax() const;

    bool operator==(const ClassScores&) const = default;

private:
    std::map<ClassLabel, double> probs_;
};

/// Classifies a preprocessed volume. `scan_id` identifies the scan for
/// models that need it; most ignore it. Implementations must be safe to call
/// concurrently.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual ClassScores classify(const Volume& preprocessed, std::string_view scan_id = {}) const = 0;
    virtual std::vector<ClassLabel> labels() const = 0;
};

/// Segments a windowed, full-resolution volume into a mask of the same dims.
class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual Volume segment(const Volume& windowed) const = 0;
};

// Histogram features ---------------------------------------------------------

inline constexpr std::size_t kHistogramBins = 32;
inline constexpr std::size_t kFeatureLength = kHistogramBins + 3;
inline constexpr int kFeatureVersion = 1;

/// 32-bin normalized histogram of [0,1], then mean, standard deviation and
/// fraction of voxels > 0.
using FeatureVector = std::array<double, kFeatureLength>;

/// Throws PayloadTypeError for non-Real input.
FeatureVector extract_features(const Volume& preprocessed);

// Linear classifier ----------------------------------------------------------

class LinearClassifier final : public Classifier {
public:
    LinearClassifier(ClassLabel negative, ClassLabel positive);
    LinearClassifier(ClassLabel negative, ClassLabel positive, std::vector<double> weights, double bias);

    const ClassLabel& negative_label() const { return negative_; }
    const ClassLabel& positive_label() const { return positive_; }
    const std::vector<double>& weights() const { return weights_; }
    double bias() const { return bias_; }

    double logit(const FeatureVector& f) const;
    double positive_probability(const FeatureVector& f) const;
    ClassScores scores(const FeatureVector& f) const;

    ClassScores classify(const Volume& preprocessed, std::string_view scan_id = {}) const override;
    std::vector<ClassLabel> labels() const override { return {negative_, positive_}; }

    nlohmann::json to_json() const;
    static LinearClassifier from_json(const nlohmann::json& j);

private:
    ClassLabel negative_, positive_;
    std::vector<double> weights_;
    double bias_ = 0.0;
};

using ClassWeights = std::map<ClassLabel, double>;

inline ClassWeights default_class_weights() { return {{"PLD", 4.0}, {"MCC", 1.0}}; }

struct TrainingExample {
    FeatureVector features{};
    ClassLabel label;
};

struct TrainOptions {
    ClassWeights class_weights = default_class_weights();
    int epochs = 2000;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

/// w(label) * cross-entropy of one example.
double weighted_cross_entropy(const LinearClassifier& m, const TrainingExample& e, const ClassWeights& w);

/// Training objective: sum of weighted cross-entropies divided by the sum of
/// weights. Same minimizer as the plain weighted sum; the normalization makes
/// the learning rate independent of dataset size.
double training_loss(const LinearClassifier& m, std::span<const TrainingExample> data, const ClassWeights& w);

struct LossGradient {
    std::vector<double> weights;
    double bias = 0.0;
};

LossGradient training_gradient(const LinearClassifier& m, std::span<const TrainingExample> data,
                               const ClassWeights& w);

/// Full-batch gradient descent from all-zero parameters on standardized
/// features; the result is expressed in raw-feature space. Labels are ordered
/// lexicographically: the first is the negative class. Throws ValidationError
/// unless exactly two labels are present, each with a positive weight.
LinearClassifier train_linear_classifier(std::span<const TrainingExample> data, const TrainOptions& options);

// Other classifiers -----------------------------------------------------------

/// Routes by ground truth: returns probability 1 for the scan's true label.
class OracleClassifier final : public Classifier {
public:
    OracleClassifier(std::map<std::string, ClassLabel> truth, std::vector<ClassLabel> labels);
    ClassScores classify(const Volume& preprocessed, std::string_view scan_id = {}) const override;
    std::vector<ClassLabel> labels() const override { return labels_; }

private:
    std::map<std::string, ClassLabel, std::less<>> truth_;
    std::vector<ClassLabel> labels_;
};

/// Returns the same scores for every input.
class FixedClassifier final : public Classifier {
public:
    explicit FixedClassifier(ClassScores scores) : scores_(std::move(scores)) {}
    ClassScores classify(const Volume&, std::string_view = {}) const override { return scores_; }
    std::vector<ClassLabel> labels() const override;

private:
    ClassScores scores_;
};

// Threshold segmenter ----------------------------------------------------------

struct ThresholdSegmenterSpec {
    float lo = 0.0f;
    float hi = 1.0f;
    int closing_radius = 0;
    bool keep_largest_component = false;
};

/// Band threshold, morphological closing, optional largest-component filter.
class ThresholdSegmenter final : public Segmenter {
public:
    /// Throws ValidationError unless 0 <= lo < hi <= 1 and closing_radius >= 0.
    explicit ThresholdSegmenter(ThresholdSegmenterSpec spec);
    const ThresholdSegmenterSpec& spec() const { return spec_; }

    /// Throws PayloadTypeError for non-Real input and EmptyMaskError when
    /// keep_largest_component is set and nothing survives the threshold.
    Volume segment(const Volume& windowed) const override;

    nlohmann::json to_json() const;
    static ThresholdSegmenter from_json(const nlohmann::json& j);

private:
    ThresholdSegmenterSpec spec_;
};

/// Built-in specialists tuned to the synthetic phantoms' intensity bands:
/// "PLD" keeps cyst and parenchyma intensities, "MCC" keeps lesion and
/// parenchyma intensities, and the generic model uses one compromise band.
ThresholdSegmenterSpec builtin_segmenter_spec(std::string_view name);

} // namespace segroute
