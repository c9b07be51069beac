#pragma once

#include <string>
#include <vector>

#include "dina/errors.hpp"
#include "dina/rng.hpp"
#include "dina/tensor.hpp"

namespace dina {

/// Weight tensors are multiplicative; Bias covers every additive offset
/// (biases, LayerNorm shifts, positional embeddings).
enum class ParamKind { Weight, Bias };

template <typename T>
struct NamedParameter {
  std::string name;
  ParamKind kind;
  BasicTensor<T> tensor;
};

/// Ordered, named parameter registry for one tower.
template <typename T>
class ParameterSet {
 public:
  BasicTensor<T> add(std::string name, ParamKind kind, BasicTensor<T> tensor) {
    tensor.set_requires_grad(true);
    entries_.push_back({std::move(name), kind, tensor});
    return tensor;
  }

  BasicTensor<T> normal(std::string name, Shape shape, double stddev, Rng& rng) {
    std::vector<T> data(numel(shape));
    for (T& v : data) v = static_cast<T>(rng.normal(0.0, stddev));
    return add(std::move(name), ParamKind::Weight, BasicTensor<T>(std::move(shape), std::move(data)));
  }

  BasicTensor<T> constant(std::string name, ParamKind kind, Shape shape, T value) {
    return add(std::move(name), kind, BasicTensor<T>::full(std::move(shape), value));
  }

  std::vector<NamedParameter<T>>& entries() { return entries_; }
  const std::vector<NamedParameter<T>>& entries() const { return entries_; }

  std::vector<BasicTensor<T>> tensors() const {
    std::vector<BasicTensor<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.tensor);
    return out;
  }

  const NamedParameter<T>* find(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  std::vector<std::vector<T>> snapshot() const {
    std::vector<std::vector<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
    return out;
  }

  void restore(const std::vector<std::vector<T>>& values) {
    if (values.size() != entries_.size()) throw DimensionError("parameter snapshot has wrong entry count");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto dst = entries_[i].tensor.mutable_data();
      if (values[i].size() != dst.size()) throw DimensionError("parameter snapshot shape mismatch: " + entries_[i].name);
      std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
  }

 private:
  std::vector<NamedParameter<T>> entries_;
};

}  // namespace dina
