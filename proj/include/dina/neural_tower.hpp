#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dina/ops.hpp"
#include "dina/params.hpp"
#include "dina/types.hpp"

namespace dina {

struct NeuralTowerConfig {
  int neurons = 0;
  int d_model = 64;
  int mlp_hidden = 1024;

  void validate() const;
};

/// One embedding row and one aggregation row per recorded neuron.
template <typename T>
struct NeuronEmbeddingTable {
  BasicTensor<T> embedding;    // [N x d_model]
  BasicTensor<T> aggregation;  // [N x d_model]
};

template <typename T>
struct PopulationState {
  BasicTensor<T> embedded;           // [N x d_model]
  BasicTensor<T> attended;           // [N x d_model]
  BasicTensor<T> attention_weights;  // [N x N], rows sum to one
  BasicTensor<T> aggregated;         // [N]
};

/// e_i = r_i * w_i^emb, stacked in neuron order.
template <typename T>
BasicTensor<T> embed_responses(const BasicTensor<T>& responses, const NeuronEmbeddingTable<T>& table);

template <typename T>
AttentionResult<T> population_attention(const BasicTensor<T>& embedded, const BasicTensor<T>& wq,
                                        const BasicTensor<T>& wk, const BasicTensor<T>& wv);

/// u_i = w_i^agg . r_i^atten
template <typename T>
BasicTensor<T> aggregate_neurons(const BasicTensor<T>& attended, const NeuronEmbeddingTable<T>& table);

/// Population response vector r in R^N to a 16x64 feature map:
/// embed -> single-head self-attention -> aggregate -> MLP -> reshape.
template <typename T>
class NeuralTower {
 public:
  NeuralTower(NeuralTowerConfig config, std::uint64_t seed);

  BasicTensor<T> forward(std::span<const float> responses, PopulationState<T>* state = nullptr) const;
  BasicTensor<T> forward(const BasicTensor<T>& responses, PopulationState<T>* state = nullptr) const;

  /// Masked-out neurons have their responses set to zero before embedding;
  /// attention still spans all N tokens.
  BasicTensor<T> masked_forward(std::span<const float> responses, const std::vector<bool>& keep_mask,
                                PopulationState<T>* state = nullptr) const;

  const NeuralTowerConfig& config() const { return config_; }
  const NeuronEmbeddingTable<T>& table() const { return table_; }
  const BasicTensor<T>& query_weight() const { return wq_; }
  const BasicTensor<T>& key_weight() const { return wk_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

 private:
  NeuralTowerConfig config_;
  ParameterSet<T> params_;
  NeuronEmbeddingTable<T> table_;
  BasicTensor<T> wq_, wk_, wv_;
  BasicTensor<T> w1_, b1_, w2_, b2_;
};

extern template class NeuralTower<float>;
extern template class NeuralTower<double>;

}  // namespace dina
