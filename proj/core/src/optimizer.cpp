#include "gmfp/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace gmfp::ad {

template <typename T>
Adam<T>::Adam(std::vector<NamedParameter<T>> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  for (const auto& p : params_) {
    if (!p.tensor.defined() || !p.tensor.requires_grad()) {
      throw std::invalid_argument("adam: parameter '" + p.name + "' does not require grad");
    }
    first_moment_.emplace_back(p.tensor.size(), 0.0);
    second_moment_.emplace_back(p.tensor.size(), 0.0);
  }
}

template <typename T>
void Adam<T>::step() {
  for (const auto& p : params_) {
    for (const T g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NonFiniteError("adam: non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, double(steps_));
  const double correction2 = 1.0 - std::pow(b2, double(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& tensor = params_[k].tensor;
    auto values = tensor.mutable_data();
    const auto grads = tensor.grad();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] = T(double(values[i]) - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace gmfp::ad
