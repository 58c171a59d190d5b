#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchrank/data.hpp"
#include "matchrank/losses.hpp"
#include "matchrank/metrics.hpp"
#include "matchrank/model.hpp"
#include "matchrank/simulator.hpp"

namespace matchrank {

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 512;  // slates per optimizer step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;  // epochs without val nDCG@1 improvement
  enum class Loss { listwise, pointwise };
  Loss loss = Loss::listwise;
  double tau = 1.0;
  std::size_t sinkhorn_iters = 30;
  double clip_norm = 10.0;  // global gradient-norm clip; 0 disables
  std::uint64_t seed = 1;
  std::size_t shards = 1;  // concurrent gradient workers per batch

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m;  // aligned with DinParams::named()
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  static AdamState init(const DinParams& params);
};

// Standard Adam with bias correction; one step counter increment per call.
// Parameters absent from the gradient map update with zero gradient.
void adam_step(DinParams& params, const GradientMap& grads, AdamState& state,
               const TrainConfig& cfg);

// Gradient of the mean per-slate loss over `slates`, summed shard-by-shard
// in fixed order; also returns the mean loss. Shards partition the batch
// contiguously and see read-only parameter snapshots.
struct BatchResult {
  GradientMap grads;
  double mean_loss = 0.0;
};
BatchResult batch_gradients(const std::vector<const Slate*>& slates,
                            const DinParams& params, const EncodingConfig& enc,
                            const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_ndcg1 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  DinParams best;
  EncodingConfig encoding;
  ModelConfig model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_ndcg1 = 0.0;
};

// Seeded shuffle, mini-batches, Adam, early stopping on validation nDCG@1.
// Aborts with DivergenceError (batch index + parameter norms) if the loss
// leaves the finite domain.
TrainResult train(const std::vector<Slate>& train_set, const std::vector<Slate>& val_set,
                  const EncodingConfig& enc, const ModelConfig& model,
                  const TrainConfig& cfg);

struct AblationRow {
  std::string name;
  MetricReport metrics;
};

// The four variants, identical seeds and budgets: full model, pointwise
// loss, no positional encoding, no urgency features. Metrics are on `test`.
std::vector<AblationRow> run_ablation(const SplitDataset& data, const EncodingConfig& enc,
                                      const ModelConfig& model, const TrainConfig& cfg);

std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace matchrank
