#pragma once

// Source attribution: a three-layer fully-connected classifier over bag
// embeddings, ROC AUC by the rank statistic, and a stratified k-fold driver.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmfp/optimizer.hpp"
#include "gmfp/tensor.hpp"

namespace gmfp::analysis {

using FeatureRows = std::vector<std::vector<double>>;

struct ClassifierConfig {
  std::size_t hidden = 64;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// D -> hidden -> hidden -> C with rectifiers, inputs standardized with the
/// training mean and standard deviation.
class AttributionClassifier {
 public:
  AttributionClassifier(std::size_t input_dim, std::size_t num_classes, const ClassifierConfig& config);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t input_dim() const { return input_dim_; }

  /// Softmax class scores, one row per input.
  FeatureRows predict_proba(const FeatureRows& rows) const;

  // Training access.
  void set_standardization(std::vector<double> mean, std::vector<double> scale);
  ad::Tensor<float> logits(const FeatureRows& rows) const;
  std::vector<ad::NamedParameter<float>>& parameters() { return params_; }

 private:
  std::size_t input_dim_;
  std::size_t num_classes_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<ad::NamedParameter<float>> params_;
};

/// Cross-entropy training. Throws std::invalid_argument if fewer than 2
/// classes are requested or any class in [0, num_classes) has no sample.
AttributionClassifier train_attribution_classifier(const FeatureRows& x, std::span<const std::size_t> y,
                                                   std::size_t num_classes, const ClassifierConfig& config);

struct AttributionResult {
  std::vector<std::size_t> predicted;
  FeatureRows scores;
  double accuracy = 0.0;
  double macro_auc = 0.0;
  std::vector<std::size_t> auc_classes;       // classes that entered the macro average
  std::vector<std::size_t> excluded_classes;  // no positives or no negatives
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// One-vs-rest ROC AUC by the Mann-Whitney statistic with mid-ranks for ties.
/// Throws std::invalid_argument when either class is empty.
double roc_auc(std::span<const double> scores, std::span<const bool> positive);

AttributionResult evaluate_scores(const FeatureRows& scores, std::span<const std::size_t> y,
                                  std::size_t num_classes);

AttributionResult evaluate_attribution(const AttributionClassifier& classifier, const FeatureRows& x,
                                       std::span<const std::size_t> y);

struct FoldMetrics {
  std::size_t fold = 0;
  std::size_t test_size = 0;
  double accuracy = 0.0;
  double macro_auc = 0.0;
};

struct CrossValidationResult {
  std::vector<FoldMetrics> folds;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double auc_mean = 0.0;
  double auc_std = 0.0;
  AttributionResult pooled;  // all held-out fold predictions together
};

/// Stratified k-fold: each class's samples are shuffled with `seed` and dealt
/// round-robin into folds.
std::vector<std::size_t> stratified_folds(std::span<const std::size_t> y, std::size_t folds, std::uint64_t seed);

CrossValidationResult cross_validate(const FeatureRows& x, std::span<const std::size_t> y,
                                     std::size_t num_classes, std::size_t folds,
                                     const ClassifierConfig& config);

/// Sample mean and standard deviation (n-1 denominator; 0 for one value).
std::pair<double, double> mean_std(std::span<const double> values);

}  // namespace gmfp::analysis
