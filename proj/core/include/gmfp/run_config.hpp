#pragma once

// Flat key=value run configuration shared by every pipeline stage. Keys are
// the long CLI flag names, so a saved run.cfg can be fed back with --config.

#include <cstdint>
#include <string>
#include <vector>

#include "gmfp/attribution.hpp"
#include "gmfp/ablation.hpp"
#include "gmfp/clustering.hpp"
#include "gmfp/fingerprint.hpp"
#include "gmfp/set_encoder.hpp"
#include "gmfp/synth_zoo.hpp"
#include "gmfp/training.hpp"

namespace gmfp {

struct RunConfig {
  // zoo
  std::size_t families = 3;
  std::size_t models_per_family = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t images_per_model = 2048;
  double alpha = 0.02;
  double beta = 0.05;
  double sigma = 0.02;
  std::uint64_t seed = 0;
  // training; bag-size and bags are comma lists so ablate can sweep them,
  // every other stage needs a single value
  std::string bag_size = "32";
  std::string bags = "48";
  std::size_t models_per_batch = 4;
  std::size_t bags_per_batch = 2;
  std::size_t embedding_dim = 64;
  std::size_t epochs = 10;
  double lr = 1e-3;
  double radius = 3.0;
  std::string pooling = "mean";
  // analysis
  std::size_t folds = 10;
  std::string linkage = "average";
  std::string baseline = "encoder";
  std::size_t trials = 8;
  std::size_t eval_bags = 16;
  std::size_t classifier_epochs = 100;
  std::size_t attribute_bags = 128;
  // paths
  std::string data;
  std::string checkpoint;
  std::string out;
};

/// One "key=value" line per field, in declaration order. String values are
/// double-quoted.
std::string format_run_config(const RunConfig& config);

/// Parses text written by format_run_config (blank lines and '#' comments
/// allowed). Unknown keys and malformed values throw std::invalid_argument.
RunConfig parse_run_config(const std::string& text);

/// "1,4,16" -> {1, 4, 16}; throws std::invalid_argument on anything else.
std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& key);
/// The list must hold exactly one value.
std::size_t single_value(const std::string& text, const std::string& key);

zoo::ZooConfig zoo_config(const RunConfig& config);
EncoderConfig encoder_config(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);
analysis::ClassifierConfig classifier_config(const RunConfig& config);
analysis::AblationConfig ablation_config(const RunConfig& config);
FingerprintKind baseline_kind(const RunConfig& config);
ad::SetPooling parse_pooling(const std::string& name);

}  // namespace gmfp
