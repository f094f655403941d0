#pragma once

// Contrastive training of the set encoder and bag-level embedding utilities.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmfp/fingerprint.hpp"
#include "gmfp/set_encoder.hpp"

namespace gmfp {

struct TrainConfig {
  std::size_t bag_size = 32;                 // n, images per bag
  std::size_t bags_per_model = 48;           // B, per model per epoch
  std::size_t models_per_batch = 4;          // P
  std::size_t bags_per_model_per_batch = 2;  // K
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double distance_clip = 50.0;
};

/// Residuals of every model, split into a training pool and a held-out pool
/// (the last `heldout_fraction` of each model's images).
struct ResidualDataset {
  std::vector<std::string> model_ids;
  std::vector<std::vector<Image>> train;
  std::vector<std::vector<Image>> heldout;

  std::size_t num_models() const { return model_ids.size(); }
};

inline constexpr double kDefaultHeldoutFraction = 0.25;

ResidualDataset make_residual_dataset(std::span<const std::vector<Image>> model_images,
                                      std::vector<std::string> model_ids,
                                      double heldout_fraction = kDefaultHeldoutFraction);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct TrainResult {
  SetEncoder<float> encoder;
  std::vector<StepRecord> steps;
  std::vector<double> epoch_mean_loss;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Validates the bag plan; throws std::invalid_argument on infeasible plans.
void validate_train_plan(const ResidualDataset& data, const TrainConfig& config);

/// Trains from a fresh encoder seeded from config.seed.
TrainResult train_encoder(const ResidualDataset& data, const EncoderConfig& encoder_config,
                          const TrainConfig& config, const StepCallback& on_step = {});

/// Continues training `initial` (parameters are copied, not shared).
TrainResult train_encoder(const ResidualDataset& data, const SetEncoder<float>& initial,
                          const TrainConfig& config, const StepCallback& on_step = {});

/// Deep copy of an encoder's parameters.
SetEncoder<float> clone_encoder(const SetEncoder<float>& encoder);

/// Componentwise mean of bag embeddings that all carry the same source.
ModelFingerprint model_fingerprint(std::span<const Embedding> bag_embeddings);

/// Per-image phi features cached for cheap bag embedding: a bag's embedding
/// is head(pool(features of its images)), bitwise equal to set_encode.
class FeatureBank {
 public:
  FeatureBank(const SetEncoder<float>& encoder, std::span<const Image> residuals);

  std::size_t size() const { return rows_; }
  std::span<const float> features(std::size_t image) const;

  /// Embeds each bag (a list of image indices into this bank).
  /// All bags in one call must have the same size.
  std::vector<std::vector<float>> embed_bags(const std::vector<std::vector<std::size_t>>& bags) const;

 private:
  const SetEncoder<float>* encoder_;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

}  // namespace gmfp
