#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "matchrank/tensor.hpp"

namespace matchrank {

// Row-stochastic relaxation of the descending-sort permutation; row r is a
// distribution over which item occupies rank r.
struct SoftPermutation {
  Tensor p;  // {m, m}
  double tau = 1.0;
};

// Deterministic NeuralSort operator:
//   P[i, j] = softmax_j( ((m + 1 - 2(i+1)) * s_j - sum_k |s_j - s_k|) / tau )
// Differentiable in the scores; rows sum to 1 by construction.
SoftPermutation neural_sort(Tape& tape, const Tensor& scores, double tau);

// Alternate row/column normalization toward a doubly stochastic matrix.
// Input must be strictly positive (softmax output qualifies).
SoftPermutation sinkhorn(Tape& tape, const SoftPermutation& p, std::size_t iters);

struct NeuralNdcgConfig {
  double tau = 1.0;
  std::size_t sinkhorn_iters = 30;
  std::optional<std::size_t> k;  // cutoff; none = full slate
};

// L = -(expected DCG of soft-sorted gains) / maxDCG, gains 2^y - 1,
// discount 1/log2(rank+1). Throws on all-zero labels.
Tensor neural_ndcg_loss(Tape& tape, const Tensor& scores,
                        const std::vector<double>& labels,
                        const NeuralNdcgConfig& cfg = {});

// Mean binary cross-entropy over candidates with p = sigmoid(score),
// the positive-class probability of the model's 2-way logit softmax.
Tensor pointwise_loss(Tape& tape, const Tensor& scores,
                      const std::vector<double>& labels);

}  // namespace matchrank
