#include "matchrank/model.hpp"

#include <cmath>

#include "matchrank/rng.hpp"

namespace matchrank {

void ModelConfig::validate() const {
  if (attention_hidden == 0) throw ConfigError("model: attention_hidden must be positive");
  if (mlp_hidden.empty()) throw ConfigError("model: mlp_hidden must not be empty");
  for (auto w : mlp_hidden) {
    if (w == 0) throw ConfigError("model: mlp_hidden widths must be positive");
  }
}

namespace {

Tensor glorot(Rng rng, std::size_t fan_in, std::size_t fan_out, Shape shape) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(data), true);
}

DenseLayer dense(const Rng& rng, const std::string& name, std::size_t in,
                 std::size_t out, bool with_prelu, bool with_bias = true) {
  DenseLayer l;
  l.w = glorot(rng.derive(name + ".w"), in, out, {in, out});
  if (with_bias) l.b = Tensor::zeros({out}, true);
  if (with_prelu) l.slope = Tensor::full({out}, 0.25, true);
  return l;
}

}  // namespace

DinParams DinParams::init(const EncodingConfig& enc, const ModelConfig& model,
                          std::uint64_t seed) {
  enc.validate();
  model.validate();
  const Rng rng = Rng(seed).derive("din-params");
  DinParams p;
  p.sport_embedding = glorot(rng.derive("sport_embedding"), enc.sports.size(),
                             enc.d_sport, {enc.sports.size(), enc.d_sport});
  p.format_embedding = glorot(rng.derive("format_embedding"), enc.formats.size(),
                              enc.d_format, {enc.formats.size(), enc.d_format});
  p.interaction_embedding = glorot(rng.derive("interaction_embedding"), 3,
                                   enc.d_interaction, {3, enc.d_interaction});
  p.bucket_embedding = glorot(rng.derive("bucket_embedding"), enc.n_buckets(),
                              enc.d_bucket, {enc.n_buckets(), enc.d_bucket});
  const std::size_t d_in = enc.d_history() + enc.d_candidate();
  p.attention_l1 = dense(rng, "attention_l1", d_in, model.attention_hidden, true);
  // no bias on the logit layer: softmax normalization cancels it exactly
  p.attention_l2 = dense(rng, "attention_l2", model.attention_hidden, 1, false,
                         /*with_bias=*/false);
  std::size_t prev = d_in;
  for (std::size_t i = 0; i < model.mlp_hidden.size(); ++i) {
    p.mlp.push_back(dense(rng, "mlp" + std::to_string(i), prev, model.mlp_hidden[i], true));
    prev = model.mlp_hidden[i];
  }
  p.mlp.push_back(dense(rng, "mlp_out", prev, 2, false));
  return p;
}

std::vector<std::pair<std::string, Tensor*>> DinParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("sport_embedding", &sport_embedding);
  out.emplace_back("format_embedding", &format_embedding);
  out.emplace_back("interaction_embedding", &interaction_embedding);
  out.emplace_back("bucket_embedding", &bucket_embedding);
  out.emplace_back("attention_l1.w", &attention_l1.w);
  out.emplace_back("attention_l1.b", &attention_l1.b);
  out.emplace_back("attention_l1.slope", &attention_l1.slope);
  out.emplace_back("attention_l2.w", &attention_l2.w);
  for (std::size_t i = 0; i < mlp.size(); ++i) {
    const std::string base =
        i + 1 == mlp.size() ? std::string("mlp_out") : "mlp" + std::to_string(i);
    out.emplace_back(base + ".w", &mlp[i].w);
    out.emplace_back(base + ".b", &mlp[i].b);
    if (mlp[i].slope.defined()) out.emplace_back(base + ".slope", &mlp[i].slope);
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> DinParams::named() const {
  auto mutable_named = const_cast<DinParams*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mutable_named.size());
  for (auto& [name, t] : mutable_named) out.emplace_back(name, t);
  return out;
}

DinParams DinParams::clone() const {
  DinParams copy = *this;
  for (auto& [name, t] : copy.named()) {
    *t = Tensor(t->shape(), t->data(), t->requires_grad());
  }
  return copy;
}

std::size_t DinParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

void DinParams::check_shapes(const EncodingConfig& enc, const ModelConfig& model) const {
  const std::size_t d_in = enc.d_history() + enc.d_candidate();
  auto expect = [](const Tensor& t, Shape shape, const char* what) {
    if (!t.defined() || t.shape() != shape) {
      throw ConfigError(std::string("params: ") + what + " has shape " +
                        (t.defined() ? t.shape_str() : std::string("<undefined>")) +
                        ", expected another layout for this config");
    }
  };
  expect(sport_embedding, {enc.sports.size(), enc.d_sport}, "sport_embedding");
  expect(format_embedding, {enc.formats.size(), enc.d_format}, "format_embedding");
  expect(interaction_embedding, {3, enc.d_interaction}, "interaction_embedding");
  expect(bucket_embedding, {enc.n_buckets(), enc.d_bucket}, "bucket_embedding");
  expect(attention_l1.w, {d_in, model.attention_hidden}, "attention_l1.w");
  expect(attention_l2.w, {model.attention_hidden, 1}, "attention_l2.w");
  if (mlp.size() != model.mlp_hidden.size() + 1) {
    throw ConfigError("params: MLP depth does not match config");
  }
  std::size_t prev = d_in;
  for (std::size_t i = 0; i < model.mlp_hidden.size(); ++i) {
    expect(mlp[i].w, {prev, model.mlp_hidden[i]}, "mlp.w");
    prev = model.mlp_hidden[i];
  }
  expect(mlp.back().w, {prev, 2}, "mlp_out.w");
}

namespace {

// shared attention-unit trunk: rows = concat(history row, candidate), one
// logit per row
Tensor attention_logits(Tape& tape, const Tensor& rows, const DinParams& params) {
  Tensor h = tape.prelu(tape.linear(rows, params.attention_l1.w, params.attention_l1.b),
                        params.attention_l1.slope);
  return tape.matmul(h, params.attention_l2.w);  // {n, 1}
}

Tensor mlp_head(Tape& tape, const Tensor& x, const DinParams& params) {
  Tensor h = x;
  for (const auto& layer : params.mlp) {
    h = tape.linear(h, layer.w, layer.b);
    if (layer.slope.defined()) h = tape.prelu(h, layer.slope);
  }
  return h;  // {m, 2}
}

}  // namespace

Tensor attention_weights(Tape& tape, const Tensor& history,
                         const std::vector<bool>& mask, const Tensor& candidate,
                         const DinParams& params) {
  const std::size_t h = history.rows();
  if (mask.size() != h) {
    throw ShapeError("attention_weights: mask size " + std::to_string(mask.size()) +
                     " does not match history rows " + std::to_string(h));
  }
  Tensor rows = tape.concat({history, tape.tile_rows(candidate, h)});
  Tensor logits = tape.reshape(attention_logits(tape, rows, params), {h});
  return tape.masked_softmax(logits, mask);
}

Tensor interest_vector(Tape& tape, const Tensor& history,
                       const std::vector<bool>& mask, const Tensor& alpha) {
  const std::size_t h = history.rows();
  if (alpha.size() != h || mask.size() != h) {
    throw ShapeError("interest_vector: weights/mask do not match history rows");
  }
  Tensor v = tape.matmul(tape.reshape(alpha, {1, h}), history);
  return tape.reshape(v, {history.cols()});
}

SlateScores score_slate(Tape& tape, const SlateTensors& slate, const DinParams& params) {
  const std::size_t m = slate.n_candidates;
  const std::size_t h = slate.history.rows();
  const std::size_t d_h = slate.history.cols();

  SlateScores out;
  Tensor interest;  // {m, d_h}
  if (slate.any_history) {
    // stacked pass: block i holds history rows paired with candidate i
    Tensor rows = tape.concat({tape.repeat_blocks(slate.history, m),
                               tape.repeat_rows_each(slate.candidates, h)});
    Tensor logits = tape.reshape(attention_logits(tape, rows, params), {m, h});
    std::vector<bool> mask(m * h);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < h; ++j) mask[i * h + j] = slate.mask[j];
    }
    out.alpha = tape.masked_softmax(logits, mask);
    interest = tape.matmul(out.alpha, slate.history);
  } else {
    // cold start: null attention, zero interest vector
    out.alpha = Tensor::zeros({m, h});
    interest = Tensor::zeros({m, d_h});
  }

  Tensor features = tape.concat({interest, slate.candidates});
  Tensor two_logits = mlp_head(tape, features, params);
  static const Tensor score_of_logits({2, 1}, {1.0, -1.0});
  out.scores = tape.reshape(tape.matmul(two_logits, score_of_logits), {m});
  return out;
}

}  // namespace matchrank
