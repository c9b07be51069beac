#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dina/errors.hpp"
#include "dina/types.hpp"

namespace dina {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_string(const Shape& shape);

#ifndef NDEBUG
inline constexpr bool kCheckFiniteAfterOps = true;
#else
inline constexpr bool kCheckFiniteAfterOps = false;
#endif

/// Thread-local switch for graph recording. Inference paths disable it so
/// intermediate buffers are released as soon as they go out of scope.
bool grad_enabled();
void set_grad_enabled(bool enabled);

class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  // Aligned so Eigen kernels take the same vectorization path on every run.
  std::vector<T, Eigen::aligned_allocator<T>> value;
  std::vector<T, Eigen::aligned_allocator<T>> grad;  // empty until a gradient flows here
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents; empty for leaves.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

/// Dense row-major tensor with reverse-mode differentiation.
///
/// A tensor is a shared handle: copies alias the same buffer and graph node.
/// Operations on tensors that require gradients record a backward closure
/// while grad mode is enabled; `backward()` walks the recorded graph.
template <typename T>
class BasicTensor {
 public:
  using Scalar = T;
  using Node = detail::Node<T>;
  using MatrixMap = Eigen::Map<MatrixR<T>>;
  using ConstMatrixMap = Eigen::Map<const MatrixR<T>>;

  BasicTensor() = default;

  BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    if (numel(shape) != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                           shape_string(shape));
    }
    for (T v : data) {
      if (!std::isfinite(v)) throw NumericError("non-finite value at tensor creation");
    }
    node_->shape = std::move(shape);
    node_->value.assign(data.begin(), data.end());
    node_->requires_grad = requires_grad;
  }

  static BasicTensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> data(numel(shape), T(0));
    return BasicTensor(std::move(shape), std::move(data), requires_grad);
  }

  static BasicTensor full(Shape shape, T value, bool requires_grad = false) {
    std::vector<T> data(numel(shape), value);
    return BasicTensor(std::move(shape), std::move(data), requires_grad);
  }

  static BasicTensor scalar(T value, bool requires_grad = false) { return BasicTensor({1}, {value}, requires_grad); }

  template <typename Derived>
  static BasicTensor from_matrix(const Eigen::MatrixBase<Derived>& m, bool requires_grad = false) {
    BasicTensor t = zeros({static_cast<int>(m.rows()), static_cast<int>(m.cols())}, requires_grad);
    t.matrix() = m.template cast<T>();
    return t;
  }

  /// Wraps an op result node. Used by op implementations only.
  static BasicTensor from_node(std::shared_ptr<Node> node) {
    BasicTensor t;
    t.node_ = std::move(node);
    return t;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  std::span<T> mutable_data() { return node_->value; }
  const T* ptr() const { return node_->value.data(); }
  T* mutable_ptr() { return node_->value.data(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  T item() const {
    if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
  }

  T operator[](std::size_t i) const { return node_->value[i]; }

  /// 2-D view: rows = first extent, cols = product of the rest.
  MatrixMap matrix() { return MatrixMap(node_->value.data(), rows2d(), cols2d()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(node_->value.data(), rows2d(), cols2d()); }
  ConstMatrixMap grad_matrix() const { return ConstMatrixMap(node_->grad.data(), rows2d(), cols2d()); }

  /// Copies the value into a fresh leaf with no history.
  BasicTensor detach(bool requires_grad = false) const {
    BasicTensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = node_->shape;
    t.node_->value = node_->value;
    t.node_->requires_grad = requires_grad;
    return t;
  }

  BasicTensor clone() const { return detach(requires_grad()); }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  Eigen::Index rows2d() const { return node_->shape.empty() ? 1 : node_->shape[0]; }
  Eigen::Index cols2d() const {
    Eigen::Index c = 1;
    for (std::size_t i = 1; i < node_->shape.size(); ++i) c *= node_->shape[i];
    return c;
  }

  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Runs reverse-mode accumulation from a scalar `loss`.
///
/// Leaf tensors with requires_grad accumulate into their grad buffers across
/// calls; interior buffers are reset at the start of each call.
template <typename T>
void backward(const BasicTensor<T>& loss);

/// Vector-Jacobian product: backpropagates `seed` (same shape as `output`).
template <typename T>
void backward(const BasicTensor<T>& output, std::span<const T> seed);

extern template void backward<float>(const BasicTensor<float>&);
extern template void backward<double>(const BasicTensor<double>&);
extern template void backward<float>(const BasicTensor<float>&, std::span<const float>);
extern template void backward<double>(const BasicTensor<double>&, std::span<const double>);

}  // namespace dina
