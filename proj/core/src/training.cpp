#include "gmfp/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "gmfp/contrastive.hpp"
#include "gmfp/synth_zoo.hpp"

namespace gmfp {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSamplingStream = 2;
constexpr std::size_t kFeatureChunk = 256;

struct Batch {
  std::vector<std::size_t> models;  // one entry per model in the batch
};

// Groups of models for one round: shuffled, chunked by P, a trailing
// singleton merged into the previous group so every batch has negatives.
std::vector<Batch> plan_round(std::size_t num_models, std::size_t per_batch, std::mt19937_64& rng) {
  std::vector<std::size_t> order(num_models);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < num_models; i += per_batch) {
    Batch b;
    for (std::size_t j = i; j < std::min(num_models, i + per_batch); ++j) b.models.push_back(order[j]);
    batches.push_back(std::move(b));
  }
  if (batches.size() > 1 && batches.back().models.size() == 1) {
    batches[batches.size() - 2].models.push_back(batches.back().models.front());
    batches.pop_back();
  }
  return batches;
}

}  // namespace

ResidualDataset make_residual_dataset(std::span<const std::vector<Image>> model_images,
                                      std::vector<std::string> model_ids, double heldout_fraction) {
  if (model_images.size() != model_ids.size()) {
    throw std::invalid_argument("make_residual_dataset: ids and image lists differ in length");
  }
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw std::invalid_argument("make_residual_dataset: held-out fraction must be in [0,1)");
  }
  ResidualDataset data;
  data.model_ids = std::move(model_ids);
  for (const auto& images : model_images) {
    const auto heldout = static_cast<std::size_t>(std::floor(double(images.size()) * heldout_fraction));
    const std::size_t split = images.size() - heldout;
    std::vector<Image> train, held;
    train.reserve(split);
    held.reserve(heldout);
    for (std::size_t i = 0; i < images.size(); ++i) {
      (i < split ? train : held).push_back(residual(images[i]));
    }
    data.train.push_back(std::move(train));
    data.heldout.push_back(std::move(held));
  }
  return data;
}

void validate_train_plan(const ResidualDataset& data, const TrainConfig& config) {
  auto fail = [](const std::string& why) {
    throw std::invalid_argument("infeasible bag plan: " + why);
  };
  if (data.num_models() < 2) fail("need at least 2 models");
  if (config.bag_size < 1) fail("bag size must be >= 1");
  if (config.bags_per_model_per_batch < 2) fail("need K >= 2 bags per model per batch");
  if (config.models_per_batch < 2) fail("need P >= 2 models per batch");
  if (config.bags_per_model < config.bags_per_model_per_batch) fail("B must be >= K");
  if (!(config.learning_rate > 0.0)) fail("learning rate must be positive");
  for (std::size_t m = 0; m < data.num_models(); ++m) {
    const std::size_t need = config.bag_size * config.bags_per_model;
    if (need > data.train[m].size()) {
      fail("model " + data.model_ids[m] + " needs n*B = " + std::to_string(need) +
           " training images but has " + std::to_string(data.train[m].size()));
    }
  }
}

SetEncoder<float> clone_encoder(const SetEncoder<float>& encoder) {
  std::vector<ad::NamedParameter<float>> params;
  for (const auto& p : encoder.parameters()) {
    params.push_back({p.name, ad::Tensor<float>::from(p.tensor.shape(),
                                                      std::vector<float>(p.tensor.data().begin(),
                                                                         p.tensor.data().end()),
                                                      true)});
  }
  return SetEncoder<float>(encoder.config(), std::move(params));
}

TrainResult train_encoder(const ResidualDataset& data, const EncoderConfig& encoder_config,
                          const TrainConfig& config, const StepCallback& on_step) {
  return train_encoder(data, SetEncoder<float>(encoder_config, zoo::derive_seed(config.seed, kInitStream)),
                       config, on_step);
}

TrainResult train_encoder(const ResidualDataset& data, const SetEncoder<float>& initial,
                          const TrainConfig& config, const StepCallback& on_step) {
  validate_train_plan(data, config);
  TrainResult result{clone_encoder(initial), {}, {}};
  auto& encoder = result.encoder;
  ad::Adam<float> optimizer(encoder.parameters(), {.learning_rate = config.learning_rate});
  std::mt19937_64 rng(zoo::derive_seed(config.seed, kSamplingStream));

  const std::size_t n = config.bag_size;
  const std::size_t k = config.bags_per_model_per_batch;
  const std::size_t rounds = config.bags_per_model / k;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Bags within an epoch are disjoint (sampled without replacement).
    std::vector<std::vector<std::size_t>> order(data.num_models());
    for (std::size_t m = 0; m < data.num_models(); ++m) {
      order[m].resize(data.train[m].size());
      std::iota(order[m].begin(), order[m].end(), 0);
      std::shuffle(order[m].begin(), order[m].end(), rng);
    }
    double epoch_total = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t round = 0; round < rounds; ++round) {
      for (const auto& batch : plan_round(data.num_models(), config.models_per_batch, rng)) {
        std::vector<Image> images;
        std::vector<std::size_t> labels;
        images.reserve(batch.models.size() * k * n);
        for (const auto m : batch.models) {
          for (std::size_t b = round * k; b < (round + 1) * k; ++b) {
            for (std::size_t i = 0; i < n; ++i) images.push_back(data.train[m][order[m][b * n + i]]);
            labels.push_back(m);
          }
        }
        double loss_value = 0.0;
        try {
          const auto embeddings = encoder.forward(stack_images<float>(images), labels.size());
          auto loss = contrastive_batch_loss(embeddings, labels, {}, config.distance_clip);
          loss_value = loss.item();
          loss.backward();
          optimizer.step();
        } catch (const ad::NonFiniteError& e) {
          throw ad::NonFiniteError("train_encoder: non-finite loss at step " + std::to_string(step) +
                                   " (" + e.what() + ")");
        }
        optimizer.zero_grad();
        StepRecord record{step, epoch, loss_value};
        result.steps.push_back(record);
        if (on_step) on_step(record);
        epoch_total += loss_value;
        ++epoch_steps;
        ++step;
      }
    }
    result.epoch_mean_loss.push_back(epoch_steps ? epoch_total / double(epoch_steps) : 0.0);
  }
  return result;
}

ModelFingerprint model_fingerprint(std::span<const Embedding> bag_embeddings) {
  if (bag_embeddings.empty()) throw std::invalid_argument("model_fingerprint: no bags");
  const auto& first = bag_embeddings.front();
  std::vector<double> acc(first.z.size(), 0.0);
  for (const auto& e : bag_embeddings) {
    if (e.source_id != first.source_id) {
      throw std::invalid_argument("model_fingerprint: bags come from mixed sources");
    }
    if (e.z.size() != acc.size()) throw std::invalid_argument("model_fingerprint: dimension mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e.z[i];
  }
  for (double& v : acc) v /= double(bag_embeddings.size());
  ModelFingerprint fp;
  fp.source_id = first.source_id.value_or("");
  fp.kind = FingerprintKind::kEncoder;
  fp.vector = std::move(acc);
  fp.num_bags = bag_embeddings.size();
  return fp;
}

FeatureBank::FeatureBank(const SetEncoder<float>& encoder, std::span<const Image> residuals)
    : encoder_(&encoder), rows_(residuals.size()), dim_(encoder.embedding_dim()) {
  data_.reserve(rows_ * dim_);
  ad::NoGradGuard no_grad;
  for (std::size_t start = 0; start < rows_; start += kFeatureChunk) {
    const auto chunk = residuals.subspan(start, std::min(kFeatureChunk, rows_ - start));
    const auto features = encoder.image_features(stack_images<float>(chunk));
    data_.insert(data_.end(), features.data().begin(), features.data().end());
  }
}

std::span<const float> FeatureBank::features(std::size_t image) const {
  return std::span<const float>(data_).subspan(image * dim_, dim_);
}

std::vector<std::vector<float>> FeatureBank::embed_bags(
    const std::vector<std::vector<std::size_t>>& bags) const {
  std::vector<std::vector<float>> out;
  if (bags.empty()) return out;
  const std::size_t n = bags.front().size();
  if (n == 0) throw std::invalid_argument("FeatureBank: empty bag");
  ad::NoGradGuard no_grad;
  const std::size_t chunk = std::max<std::size_t>(1, 8192 / n);
  for (std::size_t start = 0; start < bags.size(); start += chunk) {
    const std::size_t count = std::min(chunk, bags.size() - start);
    std::vector<float> stacked;
    stacked.reserve(count * n * dim_);
    for (std::size_t b = start; b < start + count; ++b) {
      if (bags[b].size() != n) throw std::invalid_argument("FeatureBank: bags differ in size");
      for (const auto idx : bags[b]) {
        if (idx >= rows_) throw std::out_of_range("FeatureBank: image index out of range");
        const auto f = features(idx);
        stacked.insert(stacked.end(), f.begin(), f.end());
      }
    }
    const auto sets = ad::Tensor<float>::from({count, n, dim_}, std::move(stacked));
    const auto emb = encoder_->head(encoder_->pool(sets));
    for (std::size_t b = 0; b < count; ++b) {
      out.emplace_back(emb.data().begin() + b * dim_, emb.data().begin() + (b + 1) * dim_);
    }
  }
  return out;
}

}  // namespace gmfp
