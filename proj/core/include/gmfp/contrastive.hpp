#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmfp/tensor.hpp"

namespace gmfp {

inline constexpr double kDefaultDistanceClip = 50.0;

/// Contrastive set loss over a batch of bag embeddings [G,D].
///
/// For an anchor z, p_z(z') = exp(-d(z,z')) / sum_{z'' != z} exp(-d(z,z''))
/// with d the squared Euclidean distance clipped at `distance_clip`, and
/// L(z) = -log sum_{z' positive} p_z(z'). Returns the mean of L over the
/// anchors (all rows when `anchors` is empty).
///
/// Throws std::invalid_argument("batch composition violates positives-per-anchor
/// contract") if an anchor has no other row with its label.
template <typename T>
ad::Tensor<T> contrastive_batch_loss(const ad::Tensor<T>& embeddings,
                                     std::span<const std::size_t> labels,
                                     std::span<const std::size_t> anchors = {},
                                     double distance_clip = kDefaultDistanceClip);

}  // namespace gmfp
