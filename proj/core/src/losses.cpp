#include "matchrank/losses.hpp"

#include <algorithm>
#include <cmath>

namespace matchrank {

SoftPermutation neural_sort(Tape& tape, const Tensor& scores, double tau) {
  if (!(tau > 0.0)) {
    throw ValueError("neural_sort: temperature must be positive, got " +
                     std::to_string(tau));
  }
  if (scores.rank() != 1 || scores.size() == 0) {
    throw ShapeError("neural_sort: expected non-empty rank-1 scores, got " +
                     scores.shape_str());
  }
  const std::size_t m = scores.size();

  // A[j,k] = |s_j - s_k|; column term a_j = sum_k A[j,k]
  Tensor diff = tape.sub(tape.tile_cols(scores, m), tape.tile_rows(scores, m));
  Tensor col_term = tape.sum_rows(tape.abs(diff));  // {m}

  // row coefficient c_i = m + 1 - 2(i+1), constant
  std::vector<double> coeff(m);
  for (std::size_t i = 0; i < m; ++i) {
    coeff[i] = static_cast<double>(m) + 1.0 - 2.0 * static_cast<double>(i + 1);
  }
  Tensor row_scale = tape.matmul(Tensor({m, 1}, std::move(coeff)),
                                 tape.reshape(scores, {1, m}));  // {m, m}

  Tensor logits = tape.mul_scalar(
      tape.sub(row_scale, tape.tile_rows(col_term, m)), 1.0 / tau);
  SoftPermutation out;
  out.p = tape.masked_softmax(logits, std::vector<bool>(m * m, true));
  out.tau = tau;
  return out;
}

SoftPermutation sinkhorn(Tape& tape, const SoftPermutation& p, std::size_t iters) {
  if (p.p.rank() != 2 || p.p.rows() != p.p.cols()) {
    throw ShapeError("sinkhorn: expected a square matrix, got " + p.p.shape_str());
  }
  const std::size_t m = p.p.rows();
  Tensor q = p.p;
  for (std::size_t it = 0; it < iters; ++it) {
    q = tape.div(q, tape.tile_cols(tape.sum_rows(q), m));
    q = tape.div(q, tape.tile_rows(tape.sum_cols(q), m));
  }
  return SoftPermutation{q, p.tau};
}

namespace {

double discount(std::size_t rank0) {  // rank0 is 0-based
  return 1.0 / std::log2(static_cast<double>(rank0) + 2.0);
}

std::vector<double> gains_of(const std::vector<double>& labels) {
  std::vector<double> g(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) g[i] = std::exp2(labels[i]) - 1.0;
  return g;
}

}  // namespace

Tensor neural_ndcg_loss(Tape& tape, const Tensor& scores,
                        const std::vector<double>& labels,
                        const NeuralNdcgConfig& cfg) {
  const std::size_t m = scores.size();
  if (labels.size() != m) {
    throw ShapeError("neural_ndcg_loss: labels size " + std::to_string(labels.size()) +
                     " does not match scores " + scores.shape_str());
  }
  std::vector<double> gains = gains_of(labels);
  const std::size_t k = std::min(cfg.k.value_or(m), m);

  std::vector<double> sorted_gains = gains;
  std::sort(sorted_gains.begin(), sorted_gains.end(), std::greater<>());
  double max_dcg = 0.0;
  for (std::size_t r = 0; r < k; ++r) max_dcg += sorted_gains[r] * discount(r);
  if (!(max_dcg > 0.0)) {
    throw ValueError("neural_ndcg_loss: degenerate slate with no positive label");
  }

  SoftPermutation p = sinkhorn(tape, neural_sort(tape, scores, cfg.tau),
                               cfg.sinkhorn_iters);
  Tensor soft_gains = tape.matmul(p.p, Tensor({m, 1}, std::move(gains)));  // {m, 1}

  std::vector<double> w(m, 0.0);
  for (std::size_t r = 0; r < k; ++r) w[r] = discount(r);
  Tensor expected_dcg =
      tape.matmul(tape.reshape(soft_gains, {1, m}), Tensor({m, 1}, std::move(w)));
  return tape.mul_scalar(tape.reshape(expected_dcg, {}), -1.0 / max_dcg);
}

Tensor pointwise_loss(Tape& tape, const Tensor& scores,
                      const std::vector<double>& labels) {
  const std::size_t m = scores.size();
  if (labels.size() != m) {
    throw ShapeError("pointwise_loss: labels size " + std::to_string(labels.size()) +
                     " does not match scores " + scores.shape_str());
  }
  // -[y log p + (1-y) log(1-p)] with p = sigmoid(s), written as
  // (1-y)*s - log(sigmoid(s)) so only one log/sigmoid pair is needed
  Tensor p = tape.sigmoid(scores);
  Tensor log_p = tape.log(p);
  Tensor one_minus_y(scores.shape(), [&] {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 - labels[i];
    return v;
  }());
  Tensor per_item = tape.sub(tape.mul(one_minus_y, scores), log_p);
  return tape.mean(per_item);
}

}  // namespace matchrank
