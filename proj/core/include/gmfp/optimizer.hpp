#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmfp/tensor.hpp"

namespace gmfp::ad {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are double and zero-initialized.
template <typename T>
class Adam {
 public:
  Adam(std::vector<NamedParameter<T>> params, AdamConfig config = {});

  /// Applies one update from the parameters' accumulated gradients.
  /// Throws NonFiniteError naming the parameter if any gradient is not finite;
  /// in that case no parameter is modified.
  void step();
  void zero_grad();

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<NamedParameter<T>>& parameters() const { return params_; }

 private:
  std::vector<NamedParameter<T>> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::uint64_t steps_ = 0;
};

}  // namespace gmfp::ad
