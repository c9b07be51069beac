#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dina/errors.hpp"
#include "dina/tensor.hpp"

namespace dina {

enum class OptimizerRule { AdamW, RMSprop };

struct OptimizerSettings {
  OptimizerRule rule = OptimizerRule::AdamW;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;    // AdamW first-moment decay
  double beta2 = 0.999;  // AdamW second-moment decay
  double decay = 0.99;   // RMSprop mean-square decay
  double eps = 1e-8;

  static OptimizerSettings adamw() { return {OptimizerRule::AdamW, 1e-3, 1e-4, 0.9, 0.999, 0.99, 1e-8}; }
  static OptimizerSettings rmsprop() { return {OptimizerRule::RMSprop, 1e-3, 0.0, 0.9, 0.999, 0.99, 1e-8}; }
};

/// Moment buffers and step counter for one group of parameters.
///
/// AdamW applies decoupled weight decay (p <- p (1 - lr wd)) followed by the
/// bias-corrected Adam step. RMSprop keeps a running mean of squared
/// gradients; its weight decay, when nonzero, is added to the gradient.
template <typename T>
class OptimizerState {
 public:
  OptimizerState(OptimizerSettings settings, std::vector<BasicTensor<T>> params)
      : settings_(settings), params_(std::move(params)) {
    for (const auto& p : params_) {
      first_.emplace_back(p.size(), T(0));
      second_.emplace_back(p.size(), T(0));
    }
  }

  const OptimizerSettings& settings() const { return settings_; }
  std::int64_t step_count() const { return steps_; }
  const std::vector<BasicTensor<T>>& params() const { return params_; }

  /// One update using explicit gradients, one span per parameter.
  void apply(std::span<const std::span<const T>> grads) {
    if (grads.size() != params_.size()) throw DimensionError("optimizer: gradient count does not match parameters");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (grads[i].size() != params_[i].size() || first_[i].size() != params_[i].size()) {
        throw DimensionError("optimizer: gradient shape does not match parameter " + std::to_string(i));
      }
    }
    ++steps_;
    for (std::size_t i = 0; i < params_.size(); ++i) update(i, grads[i]);
  }

  /// One update from each parameter's accumulated grad (absent grad = zero).
  void step() {
    std::vector<std::vector<T>> zeros;
    zeros.reserve(params_.size());  // spans below point into it
    std::vector<std::span<const T>> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) {
      if (p.has_grad()) {
        grads.push_back(p.grad());
      } else {
        zeros.emplace_back(p.size(), T(0));
        grads.emplace_back(zeros.back());
      }
    }
    apply(grads);
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  // Raw buffers, exposed for checkpointing.
  std::vector<std::vector<T>>& first_moments() { return first_; }
  std::vector<std::vector<T>>& second_moments() { return second_; }
  void set_step_count(std::int64_t s) { steps_ = s; }

 private:
  void update(std::size_t index, std::span<const T> g) {
    T* p = params_[index].mutable_ptr();
    T* m = first_[index].data();
    T* v = second_[index].data();
    const std::size_t n = params_[index].size();
    const double lr = settings_.learning_rate;
    if (settings_.rule == OptimizerRule::AdamW) {
      const double b1 = settings_.beta1, b2 = settings_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      const double shrink = 1.0 - lr * settings_.weight_decay;
      for (std::size_t j = 0; j < n; ++j) {
        m[j] = static_cast<T>(b1 * m[j] + (1.0 - b1) * g[j]);
        v[j] = static_cast<T>(b2 * v[j] + (1.0 - b2) * g[j] * g[j]);
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        p[j] = static_cast<T>(p[j] * shrink - lr * mhat / (std::sqrt(vhat) + settings_.eps));
      }
    } else {
      const double a = settings_.decay;
      for (std::size_t j = 0; j < n; ++j) {
        const double gj = g[j] + settings_.weight_decay * p[j];
        v[j] = static_cast<T>(a * v[j] + (1.0 - a) * gj * gj);
        p[j] = static_cast<T>(p[j] - lr * gj / (std::sqrt(static_cast<double>(v[j])) + settings_.eps));
      }
    }
  }

  OptimizerSettings settings_;
  std::vector<BasicTensor<T>> params_;
  std::vector<std::vector<T>> first_;
  std::vector<std::vector<T>> second_;
  std::int64_t steps_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::span<BasicTensor<T>> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace dina
