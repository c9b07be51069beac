#include "dina/neural_tower.hpp"

#include <cmath>

namespace dina {

namespace {

constexpr double kSelfGain = 2.0;
// Small output weights over a unit bias keep the initial maps nearly
// parallel, so the first batch loss sits close to ln B.
constexpr double kOutputGain = 0.02;

}  // namespace

void NeuralTowerConfig::validate() const {
  if (neurons < 1) throw ConfigError("neural tower: neuron count must be positive");
  if (d_model < 1 || mlp_hidden < 1) throw ConfigError("neural tower: widths must be positive");
}

template <typename T>
BasicTensor<T> embed_responses(const BasicTensor<T>& responses, const NeuronEmbeddingTable<T>& table) {
  if (responses.size() != static_cast<std::size_t>(table.embedding.dim(0))) {
    throw DimensionError("embed_responses: " + std::to_string(responses.size()) + " responses for " +
                         std::to_string(table.embedding.dim(0)) + " neurons");
  }
  return scale_rows(table.embedding, responses);
}

template <typename T>
AttentionResult<T> population_attention(const BasicTensor<T>& embedded, const BasicTensor<T>& wq,
                                        const BasicTensor<T>& wk, const BasicTensor<T>& wv) {
  if (embedded.ndim() != 2) throw DimensionError("population_attention: expected [N x d_model]");
  return softmax_attention(matmul(embedded, wq), matmul(embedded, wk), matmul(embedded, wv));
}

template <typename T>
BasicTensor<T> aggregate_neurons(const BasicTensor<T>& attended, const NeuronEmbeddingTable<T>& table) {
  if (attended.shape() != table.aggregation.shape()) {
    throw DimensionError("aggregate_neurons: " + shape_string(attended.shape()) + " vs table " +
                         shape_string(table.aggregation.shape()));
  }
  return rowwise_dot(table.aggregation, attended);
}

template <typename T>
NeuralTower<T>::NeuralTower(NeuralTowerConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int n = config_.neurons, d = config_.d_model, hidden = config_.mlp_hidden;
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
  table_.embedding = params_.normal("neural.embedding", {n, d}, 1.0, rng);
  // Query/key start near a scaled identity so each token first attends to
  // itself, and each aggregation row starts along its own value vector. With
  // plain random init u_i barely depends on r_i and training memorizes.
  auto near_identity = [&](const char* name) {
    MatrixR<T> m = MatrixR<T>::Identity(d, d) * static_cast<T>(std::sqrt(kSelfGain));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<T>(rng.normal(0.0, 0.1 * proj_std));
    return params_.add(name, ParamKind::Weight, BasicTensor<T>::from_matrix(m));
  };
  wq_ = near_identity("neural.attention.wq");
  wk_ = near_identity("neural.attention.wk");
  wv_ = params_.normal("neural.attention.wv", {d, d}, proj_std, rng);
  MatrixR<T> agg = table_.embedding.matrix() * wv_.matrix();
  agg.rowwise().normalize();
  table_.aggregation = params_.add("neural.aggregation", ParamKind::Weight, BasicTensor<T>::from_matrix(agg));
  w1_ = params_.normal("neural.mlp.w1", {n, hidden}, 1.0 / std::sqrt(static_cast<double>(n)), rng);
  b1_ = params_.constant("neural.mlp.b1", ParamKind::Bias, {hidden}, T(0));
  w2_ = params_.normal("neural.mlp.w2", {hidden, kMapSize}, kOutputGain / std::sqrt(static_cast<double>(hidden)), rng);
  b2_ = params_.constant("neural.mlp.b2", ParamKind::Bias, {kMapSize}, T(1));
}

template <typename T>
BasicTensor<T> NeuralTower<T>::forward(std::span<const float> responses, PopulationState<T>* state) const {
  const int n = static_cast<int>(responses.size());
  std::vector<T> r(responses.begin(), responses.end());
  return forward(BasicTensor<T>({n}, std::move(r)), state);
}

template <typename T>
BasicTensor<T> NeuralTower<T>::forward(const BasicTensor<T>& responses, PopulationState<T>* state) const {
  if (responses.size() != static_cast<std::size_t>(config_.neurons)) {
    throw DimensionError("neural tower: got " + std::to_string(responses.size()) + " responses, model has " +
                         std::to_string(config_.neurons) + " neurons");
  }
  auto embedded = embed_responses(responses, table_);
  auto attention = population_attention(embedded, wq_, wk_, wv_);
  auto aggregated = aggregate_neurons(attention.out, table_);
  auto row = reshape(aggregated, {1, config_.neurons});
  auto hidden = gelu(add_row_bias(matmul(row, w1_), b1_));
  auto out = reshape(add_row_bias(matmul(hidden, w2_), b2_), {kMapHeight, kMapWidth});
  if (state) *state = {embedded, attention.out, attention.weights, aggregated};
  return out;
}

template <typename T>
BasicTensor<T> NeuralTower<T>::masked_forward(std::span<const float> responses, const std::vector<bool>& keep_mask,
                                              PopulationState<T>* state) const {
  if (keep_mask.size() != responses.size()) throw DimensionError("masked_forward: mask length differs from N");
  const int n = static_cast<int>(responses.size());
  std::vector<T> r(responses.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = keep_mask[i] ? static_cast<T>(responses[i]) : T(0);
  return forward(BasicTensor<T>({n}, std::move(r)), state);
}

#define DINA_INSTANTIATE_NEURAL(T)                                                                         \
  template BasicTensor<T> embed_responses(const BasicTensor<T>&, const NeuronEmbeddingTable<T>&);          \
  template AttentionResult<T> population_attention(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                                   const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> aggregate_neurons(const BasicTensor<T>&, const NeuronEmbeddingTable<T>&);        \
  template class NeuralTower<T>;

DINA_INSTANTIATE_NEURAL(float)
DINA_INSTANTIATE_NEURAL(double)

#undef DINA_INSTANTIATE_NEURAL

}  // namespace dina
