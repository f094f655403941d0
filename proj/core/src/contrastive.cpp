#include "gmfp/contrastive.hpp"

#include <stdexcept>

namespace gmfp {

template <typename T>
ad::Tensor<T> contrastive_batch_loss(const ad::Tensor<T>& embeddings,
                                     std::span<const std::size_t> labels,
                                     std::span<const std::size_t> anchors, double distance_clip) {
  if (embeddings.shape().size() != 2) {
    throw ad::ShapeError("contrastive_batch_loss: embeddings must be [G,D], got " +
                         ad::to_string(embeddings.shape()));
  }
  const std::size_t g = embeddings.dim(0);
  if (g < 2) throw std::invalid_argument("contrastive_batch_loss: batch needs at least 2 embeddings");
  if (labels.size() != g) {
    throw std::invalid_argument("contrastive_batch_loss: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(g) + " embeddings");
  }

  std::vector<bool> is_anchor(g, anchors.empty());
  for (const auto a : anchors) {
    if (a >= g) throw std::invalid_argument("contrastive_batch_loss: anchor index out of range");
    is_anchor[a] = true;
  }

  // Non-anchor rows select every other entry, so their positive mass is 1
  // and they contribute log(1) = 0.
  std::vector<T> mask(g * g, T(0));
  std::size_t anchor_count = 0;
  for (std::size_t i = 0; i < g; ++i) {
    bool has_positive = false;
    for (std::size_t j = 0; j < g; ++j) {
      if (i == j) continue;
      const bool selected = !is_anchor[i] || labels[i] == labels[j];
      mask[i * g + j] = selected ? T(1) : T(0);
      has_positive = has_positive || (is_anchor[i] && labels[i] == labels[j]);
    }
    if (is_anchor[i]) {
      ++anchor_count;
      if (!has_positive) {
        throw std::invalid_argument("batch composition violates positives-per-anchor contract");
      }
    }
  }

  const auto distances = ad::clamp_max(ad::squared_euclidean_rowpair(embeddings), distance_clip);
  const auto probs = ad::softmax_rows(ad::scalar_mul(distances, -1.0), /*exclude_diagonal=*/true);
  const auto selector = ad::Tensor<T>::from({g, g}, std::move(mask));
  // Rounding can push a full row's mass a hair above 1; L >= 0 holds exactly.
  const auto positive_mass = ad::clamp_max(ad::sum_rows(ad::mul(probs, selector)), 1.0);
  return ad::scalar_mul(ad::sum(ad::log(positive_mass)), -1.0 / double(anchor_count));
}

template ad::Tensor<float> contrastive_batch_loss(const ad::Tensor<float>&, std::span<const std::size_t>,
                                                  std::span<const std::size_t>, double);
template ad::Tensor<double> contrastive_batch_loss(const ad::Tensor<double>&, std::span<const std::size_t>,
                                                   std::span<const std::size_t>, double);

}  // namespace gmfp
