#pragma once

// Permutation-invariant set encoder F = rho . pool . phi.
//
// phi maps one residual image to a D-dimensional feature: three 3x3 stride-2
// convolutions with rectifiers, a spatial mean and a linear projection.
// Features of a bag are pooled by an unordered mean (or sum) and rho, a
// two-layer fully-connected head, produces the bag embedding, which is then
// rescaled to a fixed Euclidean length (embedding_radius; 0 disables).

#include <cstdint>
#include <span>
#include <vector>

#include "gmfp/fingerprint.hpp"
#include "gmfp/image.hpp"
#include "gmfp/optimizer.hpp"
#include "gmfp/tensor.hpp"

namespace gmfp {

struct EncoderConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::vector<std::size_t> channels{8, 16, 32};
  std::size_t embedding_dim = 64;
  ad::SetPooling pooling = ad::SetPooling::kMean;
  /// When positive, rho's output is rescaled onto the sphere of this radius.
  double embedding_radius = 3.0;
};

template <typename T>
class SetEncoder {
 public:
  using TensorT = ad::Tensor<T>;

  SetEncoder(EncoderConfig config, std::uint64_t seed);
  /// Adopts existing parameter values (checkpoint loading). Shapes must match
  /// the architecture implied by `config`.
  SetEncoder(EncoderConfig config, std::vector<ad::NamedParameter<T>> parameters);

  const EncoderConfig& config() const { return config_; }
  std::size_t embedding_dim() const { return config_.embedding_dim; }

  const std::vector<ad::NamedParameter<T>>& parameters() const { return params_; }
  /// Architecture-implied parameter shapes in declaration order.
  static std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const EncoderConfig& config);

  /// [N,1,H,W] residuals -> [N,D] per-image features.
  TensorT image_features(const TensorT& residuals) const;
  /// [G,n,D] -> [G,D]
  TensorT pool(const TensorT& features) const;
  /// [G,D] pooled features -> [G,D] embeddings.
  TensorT head(const TensorT& pooled) const;
  /// `groups` bags of equal size stacked as [groups*n,1,H,W] -> [groups,D].
  TensorT forward(const TensorT& residual_batch, std::size_t groups) const;

 private:
  const TensorT& param(std::size_t index) const { return params_[index].tensor; }

  EncoderConfig config_;
  std::vector<ad::NamedParameter<T>> params_;
};

/// Stacks same-shaped images into a [N,1,H,W] tensor without gradients.
template <typename T>
ad::Tensor<T> stack_images(std::span<const Image> images);

/// Embeds one bag of raw images (residuals are taken internally).
Embedding set_encode(const SetEncoder<float>& encoder, const Bag& bag);

/// Embeds a bag of already-computed residuals.
Embedding set_encode_residuals(const SetEncoder<float>& encoder, std::span<const Image> residuals);

/// Squared Euclidean distance between two embeddings.
double pair_distance(std::span<const float> a, std::span<const float> b);

}  // namespace gmfp
