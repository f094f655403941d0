#include "gmfp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace gmfp::ad {

namespace {

thread_local bool g_grad_enabled = true;

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

template <typename T>
void check_finite(const char* op, const std::vector<T>& values) {
  for (const T v : values) {
    if (!std::isfinite(v)) {
      throw NonFiniteError(std::string(op) + ": produced a non-finite value");
    }
  }
}

// Builds the output node, recording history when any input needs gradients.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value,
                      std::initializer_list<const Tensor<T>*> inputs,
                      std::function<void(detail::Node<T>&)> backward_fn) {
  check_finite(op, value);
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const auto* in : inputs) needs_grad = needs_grad || in->requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const auto* in : inputs) node->parents.push_back(in->node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

// Parent gradient buffer, or nullptr when that parent does not need one.
template <typename T>
T* parent_grad(detail::Node<T>& self, std::size_t index) {
  auto& parent = *self.parents[index];
  if (!parent.requires_grad) return nullptr;
  parent.ensure_grad();
  return parent.grad.data();
}

void require_rank(const char* op, const Shape& shape, std::size_t rank) {
  if (shape.size() != rank) {
    shape_fail(op, "expected rank " + std::to_string(rank) + ", got " + to_string(shape));
  }
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = numel(shape);
  return from(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  for (const auto extent : shape) {
    if (extent == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape));
  }
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + to_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  check_finite("tensor", data);
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), T(0));
  return Tensor(std::move(node));
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " +
                     to_string(node_->shape));
  }
  return node_->shape[axis];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node_->is_leaf) throw GraphError("tensor: cannot write into a non-leaf tensor");
  return node_->value;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
T Tensor<T>::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("item: tensor of shape " + to_string(node_->shape) + " is not a scalar");
  }
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(node_->shape, node_->value, false);
}

template <typename T>
void Tensor<T>::backward() {
  if (node_->value.size() != 1) {
    throw GraphError("backward: loss of shape " + to_string(node_->shape) + " is not a scalar");
  }
  if (node_->consumed) throw GraphError("backward: graph already consumed");
  if (!node_->requires_grad || node_->is_leaf) {
    throw GraphError("backward: loss was not produced by a recorded graph");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  using NodeT = detail::Node<T>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [current, next_parent] = stack.back();
    if (next_parent < current->parents.size()) {
      NodeT* parent = current->parents[next_parent++].get();
      if (parent->requires_grad && !parent->is_leaf && !visited.count(parent)) {
        if (parent->consumed) throw GraphError("backward: graph already consumed");
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(current);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] = T(1);
  std::vector<NodeT*> leaves;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* current = *it;
    current->ensure_grad();
    current->backward_fn(*current);
    for (const auto& parent : current->parents) {
      if (parent->requires_grad && parent->is_leaf) leaves.push_back(parent.get());
    }
  }
  for (NodeT* current : order) {
    current->backward_fn = nullptr;
    current->parents.clear();
    current->grad.clear();
    current->grad.shrink_to_fit();
    current->consumed = true;
  }
  for (NodeT* leaf : leaves) check_finite("backward", leaf->grad);
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bias_add = a.shape().size() == 2 && b.shape().size() == 1 &&
                        a.shape()[1] == b.shape()[0];
  if (!bias_add && a.shape() != b.shape()) {
    shape_fail("add", "incompatible shapes " + to_string(a.shape()) + " and " +
                          to_string(b.shape()));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  const std::size_t width = bd.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[bias_add ? i % width : i];
  return make_result<T>("add", a.shape(), std::move(out), {&a, &b},
                        [bias_add, width](detail::Node<T>& self) {
                          const auto& g = self.grad;
                          if (T* ga = parent_grad(self, 0)) {
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                          }
                          if (T* gb = parent_grad(self, 1)) {
                            if (!bias_add) {
                              for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                            } else {
                              std::vector<double> acc(width, 0.0);
                              for (std::size_t i = 0; i < g.size(); ++i) acc[i % width] += g[i];
                              for (std::size_t c = 0; c < width; ++c) gb[c] += T(acc[c]);
                            }
                          }
                        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    shape_fail("sub", "incompatible shapes " + to_string(a.shape()) + " and " +
                          to_string(b.shape()));
  }
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>("sub", a.shape(), std::move(out), {&a, &b}, [](detail::Node<T>& self) {
    const auto& g = self.grad;
    if (T* ga = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (T* gb = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    shape_fail("mul", "incompatible shapes " + to_string(a.shape()) + " and " +
                          to_string(b.shape()));
  }
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>("mul", a.shape(), std::move(out), {&a, &b}, [](detail::Node<T>& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (T* ga = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (T* gb = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scalar_mul(const Tensor<T>& a, double s) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(s * a.data()[i]);
  return make_result<T>("scalar_mul", a.shape(), std::move(out), {&a},
                        [s](detail::Node<T>& self) {
                          if (T* ga = parent_grad(self, 0)) {
                            const auto& g = self.grad;
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += T(s * g[i]);
                          }
                        });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
  return make_result<T>("relu", x.shape(), std::move(out), {&x}, [](detail::Node<T>& self) {
    if (T* gx = parent_grad(self, 0)) {
      const auto& xv = self.parents[0]->value;
      const auto& g = self.grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > T(0)) gx[i] += g[i];
      }
    }
  });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x.data()[i]);
  return make_result<T>("log", x.shape(), std::move(out), {&x}, [](detail::Node<T>& self) {
    if (T* gx = parent_grad(self, 0)) {
      const auto& xv = self.parents[0]->value;
      const auto& g = self.grad;
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv[i];
    }
  });
}

template <typename T>
Tensor<T> clamp_max(const Tensor<T>& x, double limit) {
  std::vector<T> out(x.size());
  const T cap = T(limit);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(x.data()[i], cap);
  return make_result<T>("clamp_max", x.shape(), std::move(out), {&x},
                        [cap](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            const auto& xv = self.parents[0]->value;
                            const auto& g = self.grad;
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              if (xv[i] < cap) gx[i] += g[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    shape_fail("reshape", "cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {&x},
                        [](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            const auto& g = self.grad;
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                          }
                        });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_fail("matmul", "cannot multiply " + to_string(a.shape()) + " by " +
                             to_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(m * n);
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const T* brow = &bv[p * n];
      for (std::size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = T(acc[j]);
  }
  return make_result<T>("matmul", {m, n}, std::move(out), {&a, &b},
                        [m, k, n](detail::Node<T>& self) {
                          const auto& g = self.grad;
                          const auto& av = self.parents[0]->value;
                          const auto& bv = self.parents[1]->value;
                          if (T* ga = parent_grad(self, 0)) {
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t p = 0; p < k; ++p) {
                                double s = 0.0;
                                for (std::size_t j = 0; j < n; ++j) {
                                  s += double(g[i * n + j]) * bv[p * n + j];
                                }
                                ga[i * k + p] += T(s);
                              }
                            }
                          }
                          if (T* gb = parent_grad(self, 1)) {
                            std::vector<double> acc(k * n, 0.0);
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t p = 0; p < k; ++p) {
                                const double aip = av[i * k + p];
                                for (std::size_t j = 0; j < n; ++j) {
                                  acc[p * n + j] += aip * g[i * n + j];
                                }
                              }
                            }
                            for (std::size_t i = 0; i < k * n; ++i) gb[i] += T(acc[i]);
                          }
                        });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dAttrs attrs) {
  require_rank("conv2d", x.shape(), 4);
  require_rank("conv2d", weight.shape(), 4);
  require_rank("conv2d", bias.shape(), 1);
  const std::size_t batch = x.shape()[0], cin = x.shape()[1], h = x.shape()[2],
                    w = x.shape()[3];
  const std::size_t cout = weight.shape()[0], ksize = weight.shape()[2];
  if (weight.shape()[1] != cin || weight.shape()[3] != ksize || bias.shape()[0] != cout) {
    shape_fail("conv2d", "input " + to_string(x.shape()) + " incompatible with weight " +
                             to_string(weight.shape()) + " and bias " + to_string(bias.shape()));
  }
  if (attrs.stride == 0 || h + 2 * attrs.pad < ksize || w + 2 * attrs.pad < ksize) {
    shape_fail("conv2d", "kernel " + to_string(weight.shape()) + " does not fit input " +
                             to_string(x.shape()));
  }
  const std::size_t ho = (h + 2 * attrs.pad - ksize) / attrs.stride + 1;
  const std::size_t wo = (w + 2 * attrs.pad - ksize) / attrs.stride + 1;
  const std::size_t rows = cin * ksize * ksize;  // im2col rows
  const std::size_t cols = ho * wo;

  const bool record = grad_enabled() &&
                      (x.requires_grad() || weight.requires_grad() || bias.requires_grad());
  // Column buffers per image, kept for the backward pass when recording.
  auto columns = std::make_shared<std::vector<T>>(record ? batch * rows * cols : rows * cols);

  const auto xv = x.data();
  const auto wv = weight.data();
  const auto bv = bias.data();
  std::vector<T> out(batch * cout * cols);
  std::vector<double> acc(cols);
  for (std::size_t img = 0; img < batch; ++img) {
    T* col = columns->data() + (record ? img * rows * cols : 0);
    const T* src = &xv[img * cin * h * w];
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t ky = 0; ky < ksize; ++ky) {
        for (std::size_t kx = 0; kx < ksize; ++kx) {
          T* dst = col + ((c * ksize + ky) * ksize + kx) * cols;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * attrs.stride + ky) -
                            static_cast<std::ptrdiff_t>(attrs.pad);
            for (std::size_t ox = 0; ox < wo; ++ox) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * attrs.stride + kx) -
                              static_cast<std::ptrdiff_t>(attrs.pad);
              const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                                  ix < static_cast<std::ptrdiff_t>(w);
              dst[oy * wo + ox] = inside ? src[(c * h + iy) * w + ix] : T(0);
            }
          }
        }
      }
    }
    for (std::size_t o = 0; o < cout; ++o) {
      std::fill(acc.begin(), acc.end(), double(bv[o]));
      for (std::size_t r = 0; r < rows; ++r) {
        const double wr = wv[o * rows + r];
        const T* crow = col + r * cols;
        for (std::size_t p = 0; p < cols; ++p) acc[p] += wr * crow[p];
      }
      T* dst = &out[(img * cout + o) * cols];
      for (std::size_t p = 0; p < cols; ++p) dst[p] = T(acc[p]);
    }
  }

  return make_result<T>(
      "conv2d", {batch, cout, ho, wo}, std::move(out), {&x, &weight, &bias},
      [=](detail::Node<T>& self) {
        const auto& g = self.grad;
        const auto& wv = self.parents[1]->value;
        T* gx = parent_grad(self, 0);
        T* gw = parent_grad(self, 1);
        T* gb = parent_grad(self, 2);
        std::vector<double> gw_acc(gw ? cout * rows : 0, 0.0);
        std::vector<double> gb_acc(gb ? cout : 0, 0.0);
        std::vector<double> dcol(gx ? rows * cols : 0);
        for (std::size_t img = 0; img < batch; ++img) {
          const T* col = columns->data() + img * rows * cols;
          const T* gimg = &g[img * cout * cols];
          if (gb) {
            for (std::size_t o = 0; o < cout; ++o) {
              for (std::size_t p = 0; p < cols; ++p) gb_acc[o] += gimg[o * cols + p];
            }
          }
          if (gw) {
            for (std::size_t o = 0; o < cout; ++o) {
              const T* go = gimg + o * cols;
              for (std::size_t r = 0; r < rows; ++r) {
                const T* crow = col + r * cols;
                double s = 0.0;
                for (std::size_t p = 0; p < cols; ++p) s += double(go[p]) * crow[p];
                gw_acc[o * rows + r] += s;
              }
            }
          }
          if (gx) {
            std::fill(dcol.begin(), dcol.end(), 0.0);
            for (std::size_t o = 0; o < cout; ++o) {
              const T* go = gimg + o * cols;
              for (std::size_t r = 0; r < rows; ++r) {
                const double wr = wv[o * rows + r];
                double* drow = &dcol[r * cols];
                for (std::size_t p = 0; p < cols; ++p) drow[p] += wr * go[p];
              }
            }
            T* dst = gx + img * cin * h * w;
            for (std::size_t c = 0; c < cin; ++c) {
              for (std::size_t ky = 0; ky < ksize; ++ky) {
                for (std::size_t kx = 0; kx < ksize; ++kx) {
                  const double* drow = &dcol[((c * ksize + ky) * ksize + kx) * cols];
                  for (std::size_t oy = 0; oy < ho; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * attrs.stride + ky) -
                                    static_cast<std::ptrdiff_t>(attrs.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                      const auto ix = static_cast<std::ptrdiff_t>(ox * attrs.stride + kx) -
                                      static_cast<std::ptrdiff_t>(attrs.pad);
                      if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                      dst[(c * h + iy) * w + ix] += T(drow[oy * wo + ox]);
                    }
                  }
                }
              }
            }
          }
        }
        for (std::size_t i = 0; i < gw_acc.size(); ++i) gw[i] += T(gw_acc[i]);
        for (std::size_t i = 0; i < gb_acc.size(); ++i) gb[i] += T(gb_acc[i]);
      });
}

// ---------------------------------------------------------------------------
// Pooling and reductions

template <typename T>
Tensor<T> mean_pool_spatial(const Tensor<T>& x) {
  require_rank("mean_pool_spatial", x.shape(), 4);
  const std::size_t outer = x.shape()[0] * x.shape()[1];
  const std::size_t area = x.shape()[2] * x.shape()[3];
  std::vector<T> out(outer);
  for (std::size_t i = 0; i < outer; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < area; ++p) s += x.data()[i * area + p];
    out[i] = T(s / double(area));
  }
  return make_result<T>("mean_pool_spatial", {x.shape()[0], x.shape()[1]}, std::move(out), {&x},
                        [outer, area](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            for (std::size_t i = 0; i < outer; ++i) {
                              const T gi = T(double(self.grad[i]) / double(area));
                              for (std::size_t p = 0; p < area; ++p) gx[i * area + p] += gi;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> mean_over_set_axis(const Tensor<T>& x, SetPooling pooling) {
  require_rank("mean_over_set_axis", x.shape(), 3);
  const std::size_t groups = x.shape()[0], n = x.shape()[1], feat = x.shape()[2];
  const double scale = pooling == SetPooling::kMean ? 1.0 / double(n) : 1.0;
  std::vector<T> out(groups * feat);
  std::vector<T> column(n);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t f = 0; f < feat; ++f) {
      for (std::size_t i = 0; i < n; ++i) column[i] = x.data()[(g * n + i) * feat + f];
      std::sort(column.begin(), column.end());
      double s = 0.0;
      for (const T v : column) s += v;
      out[g * feat + f] = T(s * scale);
    }
  }
  return make_result<T>("mean_over_set_axis", {groups, feat}, std::move(out), {&x},
                        [groups, n, feat, scale](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            for (std::size_t g = 0; g < groups; ++g) {
                              for (std::size_t f = 0; f < feat; ++f) {
                                const T gi = T(scale * self.grad[g * feat + f]);
                                for (std::size_t i = 0; i < n; ++i) gx[(g * n + i) * feat + f] += gi;
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double s = 0.0;
  for (const T v : x.data()) s += v;
  return make_result<T>("sum", {1}, {T(s)}, {&x}, [](detail::Node<T>& self) {
    if (T* gx = parent_grad(self, 0)) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += self.grad[0];
    }
  });
}

template <typename T>
Tensor<T> sum_rows(const Tensor<T>& x) {
  require_rank("sum_rows", x.shape(), 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<T> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += x.data()[i * cols + j];
    out[i] = T(s);
  }
  return make_result<T>("sum_rows", {rows}, std::move(out), {&x},
                        [rows, cols](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            for (std::size_t i = 0; i < rows; ++i) {
                              for (std::size_t j = 0; j < cols; ++j) gx[i * cols + j] += self.grad[i];
                            }
                          }
                        });
}

constexpr double kNormFloor = 1e-12;

template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& x, double radius) {
  require_rank("normalize_rows", x.shape(), 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<double> norms(rows);
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < cols; ++j) ss += double(x.data()[i * cols + j]) * double(x.data()[i * cols + j]);
    // A zero row stays zero instead of dividing by zero.
    norms[i] = std::max(std::sqrt(ss), kNormFloor);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = T(radius * double(x.data()[i * cols + j]) / norms[i]);
  }
  return make_result<T>("normalize_rows", {rows, cols}, std::move(out), {&x},
                        [rows, cols, radius, norms = std::move(norms)](detail::Node<T>& self) {
                          T* gx = parent_grad(self, 0);
                          if (!gx) return;
                          // d(r x/|x|) = (r/|x|) (g - u (u.g)), u = x/|x|
                          for (std::size_t i = 0; i < rows; ++i) {
                            const T* y = self.value.data() + i * cols;
                            const T* g = self.grad.data() + i * cols;
                            if (norms[i] == kNormFloor) {
                              for (std::size_t j = 0; j < cols; ++j) gx[i * cols + j] += T(radius / kNormFloor * double(g[j]));
                              continue;
                            }
                            double dot = 0.0;
                            for (std::size_t j = 0; j < cols; ++j) dot += double(y[j]) * double(g[j]);
                            const double u_dot = dot / radius;
                            for (std::size_t j = 0; j < cols; ++j) {
                              gx[i * cols + j] += T(radius / norms[i] * (double(g[j]) - double(y[j]) / radius * u_dot));
                            }
                          }
                        });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, bool exclude_diagonal) {
  require_rank("softmax_rows", x.shape(), 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (exclude_diagonal && (rows != cols || cols < 2)) {
    shape_fail("softmax_rows", "diagonal exclusion needs a square matrix with at least 2 rows, got " +
                                   to_string(x.shape()));
  }
  std::vector<T> out(rows * cols, T(0));
  std::vector<double> e(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) {
      if (exclude_diagonal && i == j) continue;
      peak = std::max(peak, double(x.data()[i * cols + j]));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      e[j] = (exclude_diagonal && i == j) ? 0.0 : std::exp(double(x.data()[i * cols + j]) - peak);
      total += e[j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = T(e[j] / total);
  }
  return make_result<T>("softmax_rows", x.shape(), std::move(out), {&x},
                        [rows, cols](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            const auto& y = self.value;
                            const auto& g = self.grad;
                            for (std::size_t i = 0; i < rows; ++i) {
                              double dot = 0.0;
                              for (std::size_t j = 0; j < cols; ++j) {
                                dot += double(g[i * cols + j]) * y[i * cols + j];
                              }
                              for (std::size_t j = 0; j < cols; ++j) {
                                const std::size_t idx = i * cols + j;
                                gx[idx] += T(double(y[idx]) * (double(g[idx]) - dot));
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x) {
  require_rank("log_softmax_rows", x.shape(), 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) peak = std::max(peak, double(x.data()[i * cols + j]));
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(double(x.data()[i * cols + j]) - peak);
    const double lse = peak + std::log(total);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = T(double(x.data()[i * cols + j]) - lse);
  }
  return make_result<T>("log_softmax_rows", x.shape(), std::move(out), {&x},
                        [rows, cols](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            const auto& y = self.value;
                            const auto& g = self.grad;
                            for (std::size_t i = 0; i < rows; ++i) {
                              double gsum = 0.0;
                              for (std::size_t j = 0; j < cols; ++j) gsum += g[i * cols + j];
                              for (std::size_t j = 0; j < cols; ++j) {
                                const std::size_t idx = i * cols + j;
                                gx[idx] += T(double(g[idx]) - std::exp(double(y[idx])) * gsum);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> squared_euclidean_rowpair(const Tensor<T>& x) {
  require_rank("squared_euclidean_rowpair", x.shape(), 2);
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  const auto xv = x.data();
  std::vector<T> out(n * n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = double(xv[i * d + k]) - double(xv[j * d + k]);
        s += diff * diff;
      }
      out[i * n + j] = out[j * n + i] = T(s);
    }
  }
  return make_result<T>("squared_euclidean_rowpair", {n, n}, std::move(out), {&x},
                        [n, d](detail::Node<T>& self) {
                          if (T* gx = parent_grad(self, 0)) {
                            const auto& xv = self.parents[0]->value;
                            const auto& g = self.grad;
                            std::vector<double> acc(n * d, 0.0);
                            for (std::size_t i = 0; i < n; ++i) {
                              for (std::size_t j = 0; j < n; ++j) {
                                if (i == j) continue;
                                const double coeff =
                                    2.0 * (double(g[i * n + j]) + double(g[j * n + i]));
                                if (coeff == 0.0) continue;
                                for (std::size_t k = 0; k < d; ++k) {
                                  acc[i * d + k] += coeff * (double(xv[i * d + k]) - xv[j * d + k]);
                                }
                              }
                            }
                            for (std::size_t i = 0; i < n * d; ++i) gx[i] += T(acc[i]);
                          }
                        });
}

// ---------------------------------------------------------------------------

#define GMFP_INSTANTIATE_OPS(T)                                                             \
  template class Tensor<T>;                                                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> scalar_mul(const Tensor<T>&, double);                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                            Conv2dAttrs);                                                   \
  template Tensor<T> relu(const Tensor<T>&);                                                \
  template Tensor<T> log(const Tensor<T>&);                                                 \
  template Tensor<T> clamp_max(const Tensor<T>&, double);                                   \
  template Tensor<T> mean_pool_spatial(const Tensor<T>&);                                   \
  template Tensor<T> mean_over_set_axis(const Tensor<T>&, SetPooling);                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                      \
  template Tensor<T> softmax_rows(const Tensor<T>&, bool);                                  \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                                    \
  template Tensor<T> squared_euclidean_rowpair(const Tensor<T>&);                           \
  template Tensor<T> sum(const Tensor<T>&);                                                 \
  template Tensor<T> sum_rows(const Tensor<T>&);                                            \
  template Tensor<T> normalize_rows(const Tensor<T>&, double);

GMFP_INSTANTIATE_OPS(float)
GMFP_INSTANTIATE_OPS(double)

#undef GMFP_INSTANTIATE_OPS

}  // namespace gmfp::ad
