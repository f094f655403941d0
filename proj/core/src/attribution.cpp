#include "gmfp/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>

#include "gmfp/synth_zoo.hpp"

namespace gmfp::analysis {

namespace {

ad::Tensor<float> he_weight(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / double(in)));
  std::vector<float> w(in * out);
  for (float& v : w) v = static_cast<float>(gauss(rng));
  return ad::Tensor<float>::from({in, out}, std::move(w), true);
}

}  // namespace

AttributionClassifier::AttributionClassifier(std::size_t input_dim, std::size_t num_classes,
                                             const ClassifierConfig& config)
    : input_dim_(input_dim),
      num_classes_(num_classes),
      mean_(input_dim, 0.0),
      scale_(input_dim, 1.0) {
  if (input_dim == 0) throw std::invalid_argument("classifier: input dimension must be positive");
  if (num_classes < 2) throw std::invalid_argument("classifier: need at least 2 classes");
  std::mt19937_64 rng(config.seed);
  const std::size_t h = config.hidden;
  params_.push_back({"fc1.weight", he_weight(input_dim, h, rng)});
  params_.push_back({"fc1.bias", ad::Tensor<float>::zeros({h}, true)});
  params_.push_back({"fc2.weight", he_weight(h, h, rng)});
  params_.push_back({"fc2.bias", ad::Tensor<float>::zeros({h}, true)});
  params_.push_back({"fc3.weight", he_weight(h, num_classes, rng)});
  params_.push_back({"fc3.bias", ad::Tensor<float>::zeros({num_classes}, true)});
}

void AttributionClassifier::set_standardization(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != input_dim_ || scale.size() != input_dim_) {
    throw std::invalid_argument("classifier: standardization size mismatch");
  }
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

ad::Tensor<float> AttributionClassifier::logits(const FeatureRows& rows) const {
  if (rows.empty()) throw std::invalid_argument("classifier: no inputs");
  std::vector<float> data;
  data.reserve(rows.size() * input_dim_);
  for (const auto& row : rows) {
    if (row.size() != input_dim_) {
      throw std::invalid_argument("classifier: input has " + std::to_string(row.size()) +
                                  " features, expected " + std::to_string(input_dim_));
    }
    for (std::size_t k = 0; k < input_dim_; ++k) {
      data.push_back(static_cast<float>((row[k] - mean_[k]) / scale_[k]));
    }
  }
  auto x = ad::Tensor<float>::from({rows.size(), input_dim_}, std::move(data));
  auto layer = [this](const ad::Tensor<float>& in, std::size_t i) {
    return ad::add(ad::matmul(in, params_[2 * i].tensor), params_[2 * i + 1].tensor);
  };
  const auto h1 = ad::relu(layer(x, 0));
  const auto h2 = ad::relu(layer(h1, 1));
  return layer(h2, 2);
}

FeatureRows AttributionClassifier::predict_proba(const FeatureRows& rows) const {
  ad::NoGradGuard no_grad;
  const auto probs = ad::softmax_rows(logits(rows));
  FeatureRows out(rows.size(), std::vector<double>(num_classes_));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < num_classes_; ++c) out[i][c] = probs.data()[i * num_classes_ + c];
  }
  return out;
}

AttributionClassifier train_attribution_classifier(const FeatureRows& x, std::span<const std::size_t> y,
                                                   std::size_t num_classes, const ClassifierConfig& config) {
  if (num_classes < 2) throw std::invalid_argument("train_attribution_classifier: need at least 2 classes");
  if (x.empty() || x.size() != y.size()) {
    throw std::invalid_argument("train_attribution_classifier: need one label per sample");
  }
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto label : y) {
    if (label >= num_classes) throw std::invalid_argument("train_attribution_classifier: label out of range");
    ++counts[label];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("train_attribution_classifier: class " + std::to_string(c) +
                                  " has zero samples");
    }
  }
  const std::size_t dim = x.front().size();
  AttributionClassifier classifier(dim, num_classes, config);

  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (const auto& row : x) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += row[k];
  }
  for (double& v : mean) v /= double(x.size());
  for (const auto& row : x) {
    for (std::size_t k = 0; k < dim; ++k) scale[k] += (row[k] - mean[k]) * (row[k] - mean[k]);
  }
  for (double& v : scale) v = std::sqrt(v / double(x.size())) + 1e-8;
  classifier.set_standardization(std::move(mean), std::move(scale));

  ad::Adam<float> optimizer(classifier.parameters(), {.learning_rate = config.learning_rate});
  std::mt19937_64 rng(zoo::derive_seed(config.seed, 1));
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      FeatureRows rows;
      std::vector<float> onehot(count * num_classes, 0.0f);
      for (std::size_t i = 0; i < count; ++i) {
        rows.push_back(x[order[start + i]]);
        onehot[i * num_classes + y[order[start + i]]] = 1.0f;
      }
      const auto log_probs = ad::log_softmax_rows(classifier.logits(rows));
      const auto target = ad::Tensor<float>::from({count, num_classes}, std::move(onehot));
      auto loss = ad::scalar_mul(ad::sum(ad::mul(log_probs, target)), -1.0 / double(count));
      loss.backward();
      optimizer.step();
      optimizer.zero_grad();
    }
  }
  return classifier;
}

double roc_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mid-ranks (1-based) for tied groups.
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (positive[i]) {
      rank_sum += rank[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: need both positives and negatives");
  return (rank_sum - double(n_pos) * double(n_pos + 1) / 2.0) / (double(n_pos) * double(n_neg));
}

AttributionResult evaluate_scores(const FeatureRows& scores, std::span<const std::size_t> y,
                                  std::size_t num_classes) {
  if (scores.size() != y.size() || scores.empty()) {
    throw std::invalid_argument("evaluate_attribution: need one label per score row");
  }
  AttributionResult result;
  result.scores = scores;
  result.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& row = scores[i];
    const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    result.predicted.push_back(pred);
    correct += pred == y[i];
    ++result.confusion[y[i]][pred];
  }
  result.accuracy = double(correct) / double(scores.size());

  double auc_total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<double> column(scores.size());
    const auto positive = std::make_unique<bool[]>(scores.size());
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      column[i] = scores[i][c];
      positive[i] = y[i] == c;
      n_pos += positive[i];
    }
    if (n_pos == 0 || n_pos == scores.size()) {
      result.excluded_classes.push_back(c);
      continue;
    }
    auc_total += roc_auc(column, std::span<const bool>(positive.get(), scores.size()));
    result.auc_classes.push_back(c);
  }
  if (!result.excluded_classes.empty()) {
    std::cerr << "warning: " << result.excluded_classes.size()
              << " class(es) missing from the evaluation set were excluded from macro AUC\n";
  }
  result.macro_auc = result.auc_classes.empty() ? 0.0 : auc_total / double(result.auc_classes.size());
  return result;
}

AttributionResult evaluate_attribution(const AttributionClassifier& classifier, const FeatureRows& x,
                                       std::span<const std::size_t> y) {
  return evaluate_scores(classifier.predict_proba(x), y, classifier.num_classes());
}

std::vector<std::size_t> stratified_folds(std::span<const std::size_t> y, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  std::mt19937_64 rng(zoo::derive_seed(seed, 2));
  std::vector<std::size_t> assignment(y.size(), 0);
  const std::size_t classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    // Continue the round-robin across classes so fold sizes stay balanced.
    for (std::size_t k = 0; k < members.size(); ++k) assignment[members[k]] = (offset + k) % folds;
    offset += members.size();
  }
  return assignment;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / double(values.size() - 1))};
}

CrossValidationResult cross_validate(const FeatureRows& x, std::span<const std::size_t> y,
                                     std::size_t num_classes, std::size_t folds,
                                     const ClassifierConfig& config) {
  const auto assignment = stratified_folds(y, folds, config.seed);
  CrossValidationResult cv;
  FeatureRows pooled_scores(x.size());
  std::vector<double> accuracies, aucs;
  for (std::size_t f = 0; f < folds; ++f) {
    FeatureRows train_x, test_x;
    std::vector<std::size_t> train_y, test_y, test_index;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (assignment[i] == f) {
        test_x.push_back(x[i]);
        test_y.push_back(y[i]);
        test_index.push_back(i);
      } else {
        train_x.push_back(x[i]);
        train_y.push_back(y[i]);
      }
    }
    if (test_x.empty()) continue;
    ClassifierConfig fold_config = config;
    fold_config.seed = zoo::derive_seed(config.seed, 100 + f);
    const auto classifier = train_attribution_classifier(train_x, train_y, num_classes, fold_config);
    const auto result = evaluate_attribution(classifier, test_x, test_y);
    for (std::size_t k = 0; k < test_index.size(); ++k) pooled_scores[test_index[k]] = result.scores[k];
    cv.folds.push_back({f, test_x.size(), result.accuracy, result.macro_auc});
    accuracies.push_back(result.accuracy);
    aucs.push_back(result.macro_auc);
  }
  std::tie(cv.accuracy_mean, cv.accuracy_std) = mean_std(accuracies);
  std::tie(cv.auc_mean, cv.auc_std) = mean_std(aucs);
  cv.pooled = evaluate_scores(pooled_scores, y, num_classes);
  return cv;
}

}  // namespace gmfp::analysis
