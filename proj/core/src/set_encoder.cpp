#include "gmfp/set_encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gmfp {

namespace {

constexpr std::size_t kKernel = 3;
constexpr ad::Conv2dAttrs kConvAttrs{.stride = 2, .pad = 1};

template <typename T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias) {
  return ad::add(ad::matmul(x, weight), bias);
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, ad::Shape>> SetEncoder<T>::parameter_layout(
    const EncoderConfig& config) {
  if (config.channels.empty() || config.embedding_dim == 0) {
    throw std::invalid_argument("set encoder: needs at least one conv layer and D >= 1");
  }
  std::vector<std::pair<std::string, ad::Shape>> layout;
  std::size_t in = 1;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    const std::string name = "phi.conv" + std::to_string(i + 1);
    layout.emplace_back(name + ".weight", ad::Shape{config.channels[i], in, kKernel, kKernel});
    layout.emplace_back(name + ".bias", ad::Shape{config.channels[i]});
    in = config.channels[i];
  }
  const std::size_t d = config.embedding_dim;
  layout.emplace_back("phi.proj.weight", ad::Shape{in, d});
  layout.emplace_back("phi.proj.bias", ad::Shape{d});
  layout.emplace_back("rho.fc1.weight", ad::Shape{d, d});
  layout.emplace_back("rho.fc1.bias", ad::Shape{d});
  layout.emplace_back("rho.fc2.weight", ad::Shape{d, d});
  layout.emplace_back("rho.fc2.bias", ad::Shape{d});
  return layout;
}

template <typename T>
SetEncoder<T>::SetEncoder(EncoderConfig config, std::uint64_t seed) : config_(std::move(config)) {
  std::mt19937_64 rng(seed);
  for (auto& [name, shape] : parameter_layout(config_)) {
    std::vector<T> values(ad::numel(shape), T(0));
    if (shape.size() > 1) {
      // He-normal on fan-in.
      const std::size_t fan_in = shape.size() == 4 ? shape[1] * shape[2] * shape[3] : shape[0];
      std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / double(fan_in)));
      for (T& v : values) v = T(gauss(rng));
    }
    params_.push_back({name, ad::Tensor<T>::from(shape, std::move(values), true)});
  }
}

template <typename T>
SetEncoder<T>::SetEncoder(EncoderConfig config, std::vector<ad::NamedParameter<T>> parameters)
    : config_(std::move(config)), params_(std::move(parameters)) {
  const auto layout = parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw std::invalid_argument("set encoder: expected " + std::to_string(layout.size()) +
                                " parameter tensors, got " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].second != params_[i].tensor.shape()) {
      throw std::invalid_argument("set encoder: parameter " + layout[i].first + " has shape " +
                                  ad::to_string(params_[i].tensor.shape()) + ", expected " +
                                  ad::to_string(layout[i].second));
    }
    params_[i].name = layout[i].first;
  }
}

template <typename T>
ad::Tensor<T> SetEncoder<T>::image_features(const TensorT& residuals) const {
  const auto& shape = residuals.shape();
  if (shape.size() != 4 || shape[1] != 1 || shape[2] != config_.height || shape[3] != config_.width) {
    throw ad::ShapeError("set encoder: expected residuals [N,1," + std::to_string(config_.height) +
                         "," + std::to_string(config_.width) + "], got " + ad::to_string(shape));
  }
  TensorT x = residuals;
  const std::size_t layers = config_.channels.size();
  for (std::size_t i = 0; i < layers; ++i) {
    x = ad::relu(ad::conv2d(x, param(2 * i), param(2 * i + 1), kConvAttrs));
  }
  x = ad::mean_pool_spatial(x);
  return linear(x, param(2 * layers), param(2 * layers + 1));
}

template <typename T>
ad::Tensor<T> SetEncoder<T>::pool(const TensorT& features) const {
  return ad::mean_over_set_axis(features, config_.pooling);
}

template <typename T>
ad::Tensor<T> SetEncoder<T>::head(const TensorT& pooled) const {
  const std::size_t base = 2 * config_.channels.size() + 2;
  const TensorT hidden = ad::relu(linear(pooled, param(base), param(base + 1)));
  const TensorT out = linear(hidden, param(base + 2), param(base + 3));
  return config_.embedding_radius > 0.0 ? ad::normalize_rows(out, config_.embedding_radius) : out;
}

template <typename T>
ad::Tensor<T> SetEncoder<T>::forward(const TensorT& residual_batch, std::size_t groups) const {
  const std::size_t total = residual_batch.dim(0);
  if (groups == 0 || total % groups != 0) {
    throw ad::ShapeError("set encoder: " + std::to_string(total) + " images do not split into " +
                         std::to_string(groups) + " equal bags");
  }
  const TensorT features = image_features(residual_batch);
  const TensorT sets = ad::reshape(features, {groups, total / groups, config_.embedding_dim});
  return head(pool(sets));
}

template <typename T>
ad::Tensor<T> stack_images(std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("stack_images: empty image list");
  const auto& first = images.front();
  std::vector<T> data;
  data.reserve(images.size() * first.size());
  for (const auto& image : images) {
    require_same_shape(first, image, "stack_images");
    data.insert(data.end(), image.pixels.begin(), image.pixels.end());
  }
  return ad::Tensor<T>::from({images.size(), 1, first.height, first.width}, std::move(data));
}

Embedding set_encode_residuals(const SetEncoder<float>& encoder, std::span<const Image> residuals) {
  if (residuals.empty()) throw std::invalid_argument("set_encode: empty bag");
  ad::NoGradGuard no_grad;
  const auto out = encoder.forward(stack_images<float>(residuals), 1);
  return Embedding{std::vector<float>(out.data().begin(), out.data().end()), std::nullopt};
}

Embedding set_encode(const SetEncoder<float>& encoder, const Bag& bag) {
  if (bag.images.empty()) throw std::invalid_argument("set_encode: empty bag");
  std::vector<Image> residuals;
  residuals.reserve(bag.images.size());
  for (const auto& image : bag.images) {
    if (image.height != encoder.config().height || image.width != encoder.config().width) {
      throw std::invalid_argument("set_encode: image is " + std::to_string(image.height) + "x" +
                                  std::to_string(image.width) + ", encoder expects " +
                                  std::to_string(encoder.config().height) + "x" +
                                  std::to_string(encoder.config().width));
    }
    residuals.push_back(residual(image));
  }
  auto embedding = set_encode_residuals(encoder, residuals);
  if (!bag.source_id.empty()) embedding.source_id = bag.source_id;
  return embedding;
}

double pair_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("pair_distance: dimension mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return s;
}

template class SetEncoder<float>;
template class SetEncoder<double>;
template ad::Tensor<float> stack_images<float>(std::span<const Image>);
template ad::Tensor<double> stack_images<double>(std::span<const Image>);

}  // namespace gmfp
