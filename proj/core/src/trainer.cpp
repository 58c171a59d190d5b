#include "matchrank/trainer.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "matchrank/rng.hpp"
#include "matchrank/simulator.hpp"

namespace matchrank {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("train: adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("train: tau must be positive");
  if (clip_norm < 0.0) throw ConfigError("train: clip_norm must be >= 0");
  if (shards < 1) throw ConfigError("train: shards must be >= 1");
}

AdamState AdamState::init(const DinParams& params) {
  AdamState s;
  for (const auto& [name, t] : params.named()) {
    s.m.emplace_back(t->size(), 0.0);
    s.v.emplace_back(t->size(), 0.0);
  }
  return s;
}

void adam_step(DinParams& params, const GradientMap& grads, AdamState& state,
               const TrainConfig& cfg) {
  auto named = params.named();
  if (state.m.size() != named.size() || state.v.size() != named.size()) {
    throw ShapeError("adam_step: state does not match parameter layout");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < named.size(); ++i) {
    Tensor& param = *named[i].second;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != param.size()) {
      throw ShapeError("adam_step: moment shape does not mirror parameter " +
                       named[i].first);
    }
    const std::vector<double>* g = grads.find(param);
    if (g && g->size() != param.size()) {
      throw ShapeError("adam_step: gradient shape does not match parameter " +
                       named[i].first);
    }
    std::vector<double> data = param.data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double gj = g ? (*g)[j] : 0.0;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      data[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    param = Tensor(param.shape(), std::move(data), true);
  }
}

namespace {

Tensor slate_loss(Tape& tape, const Slate& slate, const DinParams& params,
                  const EncodingConfig& enc, const TrainConfig& cfg) {
  SlateTensors st = encode_slate(tape, slate, enc, params);
  SlateScores scored = score_slate(tape, st, params);
  const auto labels = slate.one_hot_labels();
  if (cfg.loss == TrainConfig::Loss::pointwise) {
    return pointwise_loss(tape, scored.scores, labels);
  }
  return neural_ndcg_loss(tape, scored.scores, labels,
                          {cfg.tau, cfg.sinkhorn_iters, std::nullopt});
}

struct ShardResult {
  GradientMap grads;
  double loss_sum = 0.0;
  std::exception_ptr error;
};

}  // namespace

BatchResult batch_gradients(const std::vector<const Slate*>& slates,
                            const DinParams& params, const EncodingConfig& enc,
                            const TrainConfig& cfg) {
  if (slates.empty()) throw ValueError("batch_gradients: empty batch");
  const std::size_t shards = std::min<std::size_t>(cfg.shards, slates.size());
  std::vector<ShardResult> results(shards);

  auto worker = [&](std::size_t shard) {
    ShardResult& r = results[shard];
    try {
      const std::size_t chunk = (slates.size() + shards - 1) / shards;
      const std::size_t lo = shard * chunk;
      const std::size_t hi = std::min(slates.size(), lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) {
        Tape tape;
        Tensor loss = slate_loss(tape, *slates[i], params, enc, cfg);
        r.loss_sum += loss.value();
        r.grads.accumulate(tape.backward(loss));
      }
    } catch (...) {
      r.error = std::current_exception();
    }
  };

  if (shards == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(shards);
    for (std::size_t s = 0; s < shards; ++s) pool.emplace_back(worker, s);
    for (auto& th : pool) th.join();
  }

  BatchResult out;
  for (std::size_t s = 0; s < shards; ++s) {
    if (results[s].error) std::rethrow_exception(results[s].error);
    out.grads.accumulate(results[s].grads);  // fixed shard order
    out.mean_loss += results[s].loss_sum;
  }
  const double inv = 1.0 / static_cast<double>(slates.size());
  out.mean_loss *= inv;
  out.grads.scale(inv);
  return out;
}

namespace {

std::string divergence_diagnostic(std::size_t epoch, std::size_t batch,
                                  const DinParams& params, const std::string& why) {
  std::ostringstream os;
  os << "training diverged at epoch " << epoch << ", batch " << batch << ": " << why
     << "; parameter norms:";
  for (const auto& [name, t] : params.named()) {
    double sq = 0.0;
    for (double v : t->data()) sq += v * v;
    os << ' ' << name << '=' << std::sqrt(sq);
  }
  return os.str();
}

// global-norm clip over parameters in named order, so the norm (and hence
// the update) is reproducible bit for bit
void clip_gradients(GradientMap& grads, const DinParams& params, double clip_norm) {
  if (clip_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& [name, t] : params.named()) {
    if (const auto* g = grads.find(*t)) {
      for (double v : *g) sq += v * v;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) grads.scale(clip_norm / norm);
}

}  // namespace

TrainResult train(const std::vector<Slate>& train_set, const std::vector<Slate>& val_set,
                  const EncodingConfig& enc, const ModelConfig& model,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) {
    throw ValueError("train: train and validation sets must be non-empty");
  }
  DinParams params = DinParams::init(enc, model, cfg.seed);
  AdamState state = AdamState::init(params);
  Rng shuffle_rng = Rng(cfg.seed).derive("epoch-shuffle");

  TrainResult result;
  result.encoding = enc;
  result.model = model;
  result.best_val_ndcg1 = -1.0;

  std::vector<const Slate*> order;
  order.reserve(train_set.size());
  for (const auto& s : train_set) order.push_back(&s);

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const std::vector<const Slate*> batch(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                            order.begin() + static_cast<std::ptrdiff_t>(hi));
      BatchResult br;
      try {
        br = batch_gradients(batch, params, enc, cfg);
      } catch (const ValueError& e) {
        throw DivergenceError(divergence_diagnostic(epoch, n_batches, params, e.what()));
      }
      if (!std::isfinite(br.mean_loss)) {
        throw DivergenceError(
            divergence_diagnostic(epoch, n_batches, params, "loss is not finite"));
      }
      clip_gradients(br.grads, params, cfg.clip_norm);
      adam_step(params, br.grads, state, cfg);
      loss_sum += br.mean_loss;
      ++n_batches;
    }

    MetricReport val = evaluate(params, enc, val_set, {{1}, cfg.shards});
    const double val1 = val.ndcg_at(1);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(
        {epoch, loss_sum / static_cast<double>(n_batches), val1, wall});

    if (val1 > result.best_val_ndcg1) {
      result.best_val_ndcg1 = val1;
      result.best = params.clone();
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }
  return result;
}

std::vector<AblationRow> run_ablation(const SplitDataset& data, const EncodingConfig& enc,
                                      const ModelConfig& model, const TrainConfig& cfg) {
  struct Variant {
    const char* name;
    TrainConfig::Loss loss;
    bool positional;
    bool urgency;
  };
  static constexpr Variant variants[] = {
      {"full", TrainConfig::Loss::listwise, true, true},
      {"pointwise_loss", TrainConfig::Loss::pointwise, true, true},
      {"no_positional_encoding", TrainConfig::Loss::listwise, false, true},
      {"no_urgency_features", TrainConfig::Loss::listwise, true, false},
  };
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    EncodingConfig e = enc;
    e.use_positional_encoding = v.positional;
    e.use_urgency_features = v.urgency;
    TrainConfig t = cfg;
    t.loss = v.loss;
    TrainResult r = train(data.train, data.val, e, model, t);
    MetricReport metrics = evaluate(r.best, e, data.test, {{1, 3, 5}, cfg.shards});
    rows.push_back({v.name, std::move(metrics)});
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant                  ndcg@1  ndcg@3  ndcg@5  recall@1  recall@3  recall@5\n";
  os.setf(std::ios::fixed);
  os.precision(4);
  for (const auto& row : rows) {
    os << row.name;
    for (std::size_t i = row.name.size(); i < 25; ++i) os << ' ';
    os << row.metrics.ndcg_at(1) << "  " << row.metrics.ndcg_at(3) << "  "
       << row.metrics.ndcg_at(5) << "  " << row.metrics.recall_at(1) << "    "
       << row.metrics.recall_at(3) << "    " << row.metrics.recall_at(5) << '\n';
  }
  return os.str();
}

}  // namespace matchrank
