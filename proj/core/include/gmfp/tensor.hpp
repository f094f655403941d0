#pragma once

// Dense tensors with define-by-run reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Every op that receives at
// least one input requiring gradients records a backward closure on its
// output node; calling backward() on a scalar walks the recorded graph in
// reverse topological order and accumulates into leaf gradients. The graph
// is released after one backward pass.
//
// Storage is T (float for training, double for gradient checks); all
// reductions accumulate in double.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmfp::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// While alive, ops on this thread record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty unless requires_grad (lazily sized for interior nodes)
  bool requires_grad = false;
  bool is_leaf = true;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<const T> data() const { return node_->value; }
  /// Direct write access; only valid for leaves (parameters, inputs).
  std::span<T> mutable_data();

  bool requires_grad() const { return node_->requires_grad; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Value of a one-element tensor.
  T item() const;

  /// Reverse pass from this scalar. Throws GraphError if the tensor is not a
  /// scalar or its graph has already been consumed.
  void backward();

  /// Same values, no history, no gradient.
  Tensor detach() const;

  // Internal: used by op implementations.
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

struct Conv2dAttrs {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

enum class SetPooling { kMean, kSum };

// Elementwise on identical shapes. add() also accepts a rank-1 right operand
// whose length equals the last extent of a rank-2 left operand (bias-add).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scalar_mul(const Tensor<T>& a, double s);

/// [M,K] x [K,N] -> [M,N]
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// x [N,C,H,W], weight [O,C,k,k], bias [O] -> [N,O,Ho,Wo], zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dAttrs attrs);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> log(const Tensor<T>& x);
/// min(x, limit); gradient is zero where clipped.
template <typename T> Tensor<T> clamp_max(const Tensor<T>& x, double limit);

/// [N,C,H,W] -> [N,C]
template <typename T> Tensor<T> mean_pool_spatial(const Tensor<T>& x);

/// [G,n,F] -> [G,F]. Each output element is reduced over a canonically sorted
/// copy of its n inputs, so the result is bitwise independent of set order.
template <typename T>
Tensor<T> mean_over_set_axis(const Tensor<T>& x, SetPooling pooling = SetPooling::kMean);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Row-wise softmax of [N,M]. With exclude_diagonal the (i,i) entries are
/// left out of each row's normalization and come out as exactly zero.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, bool exclude_diagonal = false);
template <typename T> Tensor<T> log_softmax_rows(const Tensor<T>& x);

/// [N,D] -> [N,N] with entry (i,j) = ||x_i - x_j||^2.
template <typename T> Tensor<T> squared_euclidean_rowpair(const Tensor<T>& x);

/// Sum of all elements -> shape {1}.
template <typename T> Tensor<T> sum(const Tensor<T>& x);
/// [N,M] -> [N]
template <typename T> Tensor<T> sum_rows(const Tensor<T>& x);
/// [N,M] -> [N,M]: each row rescaled to Euclidean length `radius`.
/// A zero row (norm below 1e-12) maps to zeros.
template <typename T> Tensor<T> normalize_rows(const Tensor<T>& x, double radius);

}  // namespace gmfp::ad
