#include "dina/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace dina {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool enabled) { g_grad_enabled = enabled; }

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

template <typename T>
std::vector<detail::Node<T>*> topological_order(detail::Node<T>* root) {
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> visited;
  // Iterative post-order DFS; graphs can be thousands of nodes deep.
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children
}

template <typename T>
void run_backward(detail::Node<T>* root, std::span<const T> seed) {
  if (!root->requires_grad) throw ContractError("backward() on a tensor that does not require grad");
  auto order = topological_order(root);
  for (auto* node : order) {
    if (node->backward) node->grad.assign(node->value.size(), T(0));
  }
  root->ensure_grad();
  for (std::size_t i = 0; i < seed.size(); ++i) root->grad[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* node = *it;
    if (node->backward) node->backward(*node);
  }
}

}  // namespace

template <typename T>
void backward(const BasicTensor<T>& loss) {
  if (loss.size() != 1) throw ContractError("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  const T one(1);
  run_backward<T>(loss.node().get(), std::span<const T>(&one, 1));
}

template <typename T>
void backward(const BasicTensor<T>& output, std::span<const T> seed) {
  if (seed.size() != output.size()) throw DimensionError("backward seed does not match output size");
  run_backward<T>(output.node().get(), seed);
}

template void backward<float>(const BasicTensor<float>&);
template void backward<double>(const BasicTensor<double>&);
template void backward<float>(const BasicTensor<float>&, std::span<const float>);
template void backward<double>(const BasicTensor<double>&, std::span<const double>);

}  // namespace dina
