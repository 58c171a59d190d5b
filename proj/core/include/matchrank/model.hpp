#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "matchrank/encoding.hpp"
#include "matchrank/tensor.hpp"

namespace matchrank {

// Network sizes. The prediction head ends in 2 logits; the ranking score is
// their difference (log-odds of the 2-way softmax), which preserves order.
struct ModelConfig {
  std::size_t attention_hidden = 32;
  std::vector<std::size_t> mlp_hidden = {200, 80};

  void validate() const;
};

struct DenseLayer {
  Tensor w;
  Tensor b;      // undefined on the attention logit layer, where softmax
                 // normalization would cancel a bias exactly
  Tensor slope;  // PReLU slopes; undefined on output layers
};

// All learnable parameters. Tensors are immutable; the trainer swaps in
// fresh tensors between steps.
struct DinParams {
  Tensor sport_embedding;        // {n_sports, d_sport}
  Tensor format_embedding;       // {n_formats, d_format}
  Tensor interaction_embedding;  // {3, d_interaction}
  Tensor bucket_embedding;       // {n_buckets, d_bucket}
  DenseLayer attention_l1;       // {d_h + d_z, attention_hidden}
  DenseLayer attention_l2;       // {attention_hidden, 1}, no PReLU
  std::vector<DenseLayer> mlp;   // hidden layers with PReLU, then {*, 2} output

  // Glorot-uniform weights, zero biases, PReLU slopes 0.25. Each tensor
  // draws from its own label-derived stream, so layout changes do not
  // reshuffle unrelated parameters.
  static DinParams init(const EncodingConfig& enc, const ModelConfig& model,
                        std::uint64_t seed);

  // Fixed traversal order; the trainer and checkpoints rely on it.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

  DinParams clone() const;
  std::size_t parameter_count() const;
  void check_shapes(const EncodingConfig& enc, const ModelConfig& model) const;
};

struct SlateScores {
  Tensor scores;  // {m}
  Tensor alpha;   // {m, h_max} attention diagnostic; all-zero rows on cold start
};

// Attention unit: per history row j, concat(v(a_j), z_i) -> hidden ->
// PReLU -> scalar logit; masked softmax over the real rows.
Tensor attention_weights(Tape& tape, const Tensor& history,
                         const std::vector<bool>& mask, const Tensor& candidate,
                         const DinParams& params);

// v_u(i) = sum_j alpha_ij * v(a_j). mask documents which rows are real;
// padded rows carry exactly zero weight.
Tensor interest_vector(Tape& tape, const Tensor& history,
                       const std::vector<bool>& mask, const Tensor& alpha);

// Scores every candidate: attention over history conditioned on each
// candidate, interest vector concat candidate features, prediction MLP.
// Candidates are independent, so the computation is batched as one stacked
// pass; per-row results are identical to scoring candidates one at a time.
SlateScores score_slate(Tape& tape, const SlateTensors& slate, const DinParams& params);

}  // namespace matchrank
