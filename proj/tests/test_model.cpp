#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "matchrank/losses.hpp"
#include "matchrank/model.hpp"
#include "test_helpers.hpp"

using namespace matchrank;
using namespace matchrank::testing;

namespace {

struct Fixture {
  EncodingConfig enc = tiny_encoding();
  ModelConfig model = tiny_model();
  DinParams params = DinParams::init(enc, model, 7);
};

std::vector<Tensor> param_leaves(DinParams& p) {
  std::vector<Tensor> leaves;
  for (auto& [name, t] : p.named()) leaves.push_back(*t);
  return leaves;
}

// rebuilds DinParams around replacement leaf tensors, preserving order
DinParams with_leaves(const DinParams& base, const std::vector<Tensor>& leaves) {
  DinParams p = base.clone();
  auto named = p.named();
  REQUIRE(named.size() == leaves.size());
  for (std::size_t i = 0; i < named.size(); ++i) *named[i].second = leaves[i];
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("parameter layout chains and counts") {
  Fixture f;
  f.params.check_shapes(f.enc, f.model);
  CHECK(f.params.parameter_count() > 0);
  // pure function of config
  DinParams other = DinParams::init(f.enc, f.model, 1234);
  CHECK(other.parameter_count() == f.params.parameter_count());

  ModelConfig bad = f.model;
  bad.attention_hidden = 5;
  CHECK_THROWS_AS(f.params.check_shapes(f.enc, bad), ConfigError);
}

TEST_CASE("init is seed deterministic") {
  Fixture f;
  DinParams again = DinParams::init(f.enc, f.model, 7);
  auto a = f.params.named();
  auto b = again.named();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].second->data() == b[i].second->data());
  }
}

TEST_CASE("attention: single unmasked action takes all weight") {
  Fixture f;
  Slate s = tiny_slate();
  s.history.resize(1);
  Tape tape;
  SlateTensors st = encode_slate(tape, s, f.enc, f.params);
  Tensor z = tape.gather_row(st.candidates, 0);
  Tensor alpha = attention_weights(tape, st.history, st.mask, z, f.params);
  CHECK(alpha[alpha.size() - 1] == 1.0);
  for (std::size_t j = 0; j + 1 < alpha.size(); ++j) CHECK(alpha[j] == 0.0);
}

TEST_CASE("attention: identical actions share weight equally") {
  Fixture f;
  Slate s = tiny_slate();
  s.history = {s.history[0], s.history[0]};
  s.history[1].t = s.history[0].t;  // identical in every field
  Tape tape;
  SlateTensors st = encode_slate(tape, s, f.enc, f.params);
  Tensor z = tape.gather_row(st.candidates, 1);
  Tensor alpha = attention_weights(tape, st.history, st.mask, z, f.params);
  const std::size_t h = alpha.size();
  CHECK(alpha[h - 1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(alpha[h - 2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("attention is target aware") {
  Fixture f;
  Slate s = tiny_slate();
  Tape tape;
  SlateTensors st = encode_slate(tape, s, f.enc, f.params);
  Tensor za = tape.gather_row(st.candidates, 0);
  Tensor zb = tape.gather_row(st.candidates, 1);
  Tensor aa = attention_weights(tape, st.history, st.mask, za, f.params);
  Tensor ab = attention_weights(tape, st.history, st.mask, zb, f.params);
  CHECK(aa.data() != ab.data());
}

TEST_CASE("interest vector reductions") {
  Fixture f;
  Slate s = tiny_slate();
  s.history.resize(1);
  Tape tape;
  SlateTensors st = encode_slate(tape, s, f.enc, f.params);
  Tensor z = tape.gather_row(st.candidates, 0);
  Tensor alpha = attention_weights(tape, st.history, st.mask, z, f.params);
  Tensor v = interest_vector(tape, st.history, st.mask, alpha);
  // single action: the interest vector is exactly that action's encoding
  Tensor enc0 = encode_history_action(tape, s.history[0], s.t_c, f.enc, f.params);
  CHECK(v.data() == enc0.data());

  // uniform weights over two actions: arithmetic mean
  Slate s2 = tiny_slate();
  s2.history.resize(2);
  Tape t2;
  SlateTensors st2 = encode_slate(t2, s2, f.enc, f.params);
  std::vector<double> w(f.enc.h_max, 0.0);
  w[f.enc.h_max - 1] = 0.5;
  w[f.enc.h_max - 2] = 0.5;
  Tensor v2 = interest_vector(t2, st2.history, st2.mask, Tensor({f.enc.h_max}, w));
  Tensor ea = encode_history_action(t2, s2.history[0], s2.t_c, f.enc, f.params);
  Tensor eb = encode_history_action(t2, s2.history[1], s2.t_c, f.enc, f.params);
  for (std::size_t j = 0; j < v2.size(); ++j) {
    CHECK(v2[j] == doctest::Approx(0.5 * ea[j] + 0.5 * eb[j]).epsilon(1e-12));
  }
}

TEST_CASE("interest vector gradient w.r.t. attention weights") {
  Fixture f;
  Slate s = tiny_slate();
  auto leaves = param_leaves(f.params);
  const double err = max_grad_rel_err(
      leaves, [&](Tape& t, const std::vector<Tensor>& l) {
        DinParams p = with_leaves(f.params, l);
        SlateTensors st = encode_slate(t, s, f.enc, p);
        Tensor z = t.gather_row(st.candidates, 0);
        Tensor alpha = attention_weights(t, st.history, st.mask, z, p);
        Tensor v = interest_vector(t, st.history, st.mask, alpha);
        // a single component, as a scalar
        std::vector<double> pick(v.size(), 0.0);
        pick[2] = 1.0;
        return t.sum(t.mul(v, Tensor({v.size()}, std::move(pick))));
      });
  CHECK(err < 1e-4);
}

TEST_CASE("score_slate basics") {
  Fixture f;
  Slate s = tiny_slate();

  SUBCASE("one candidate still scores") {
    s.candidates.resize(1);
    s.label = 0;
    Tape tape;
    SlateScores out = score_slate(tape, encode_slate(tape, s, f.enc, f.params), f.params);
    CHECK(out.scores.size() == 1);
  }

  SUBCASE("duplicate candidates score identically") {
    s.candidates[1] = s.candidates[0];
    Tape tape;
    SlateScores out = score_slate(tape, encode_slate(tape, s, f.enc, f.params), f.params);
    CHECK(out.scores[0] == out.scores[1]);
  }

  SUBCASE("batched scoring equals the per-candidate path bitwise") {
    Tape tape;
    SlateTensors st = encode_slate(tape, s, f.enc, f.params);
    SlateScores batched = score_slate(tape, st, f.params);
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      Tensor z = tape.gather_row(st.candidates, i);
      Tensor alpha = attention_weights(tape, st.history, st.mask, z, f.params);
      for (std::size_t j = 0; j < f.enc.h_max; ++j) {
        CHECK(alpha[j] == batched.alpha[i * f.enc.h_max + j]);
      }
    }
  }
}

TEST_CASE("permutation equivariance is exact") {
  Fixture f;
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    Slate s = random_slate(rng, f.enc, 6);
    Tape t1;
    SlateScores base = score_slate(t1, encode_slate(t1, s, f.enc, f.params), f.params);

    std::vector<std::size_t> perm(s.candidates.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Slate permuted = s;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      permuted.candidates[i] = s.candidates[perm[i]];
      if (static_cast<std::size_t>(s.label) == perm[i]) {
        permuted.label = static_cast<std::int32_t>(i);
      }
    }
    Tape t2;
    SlateScores moved =
        score_slate(t2, encode_slate(t2, permuted, f.enc, f.params), f.params);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      CHECK(moved.scores[i] == base.scores[perm[i]]);
    }
  }
}

TEST_CASE("padded history never affects scores or gradients") {
  Fixture f;
  Slate s = tiny_slate();
  s.history.resize(2);  // two real rows, two padded under h_max = 4
  auto leaves = param_leaves(f.params);

  auto loss_of = [&](const Tensor& history_override, GradientMap* grads_out) {
    Tape tape;
    SlateTensors st = encode_slate(tape, s, f.enc, f.params);
    if (history_override.defined()) st.history = history_override;
    SlateScores scored = score_slate(tape, st, f.params);
    Tensor loss =
        neural_ndcg_loss(tape, scored.scores, s.one_hot_labels(), {1.0, 10, {}});
    if (grads_out) *grads_out = tape.backward(loss);
    return loss.value();
  };

  GradientMap clean_grads;
  const double clean = loss_of(Tensor(), &clean_grads);

  // scribble garbage into the padded rows
  Tape tape;
  SlateTensors st = encode_slate(tape, s, f.enc, f.params);
  std::vector<double> data = st.history.data();
  Rng rng(32);
  for (std::size_t row = 0; row < f.enc.h_max; ++row) {
    if (st.mask[row]) continue;
    for (std::size_t j = 0; j < f.enc.d_history(); ++j) {
      data[row * f.enc.d_history() + j] = rng.uniform(-50.0, 50.0);
    }
  }
  // the real rows must come from the same parameters, so rebuild the graph
  // with the mutated tensor spliced in
  GradientMap dirty_grads;
  Tape t3;
  SlateTensors st3 = encode_slate(t3, s, f.enc, f.params);
  Tensor mutated(st3.history.shape(), data, st3.history.requires_grad());
  // splice: real rows re-encoded on this tape, padded rows from `mutated`
  // (mask semantics are what keeps this safe)
  st3.history = t3.stack_rows([&] {
    std::vector<Tensor> rows;
    for (std::size_t r = 0; r < f.enc.h_max; ++r) {
      if (st3.mask[r]) {
        rows.push_back(t3.gather_row(st3.history, r));
      } else {
        std::vector<double> g(data.begin() + static_cast<std::ptrdiff_t>(r * f.enc.d_history()),
                              data.begin() + static_cast<std::ptrdiff_t>((r + 1) * f.enc.d_history()));
        rows.push_back(Tensor({f.enc.d_history()}, std::move(g)));
      }
    }
    return rows;
  }());
  SlateScores scored = score_slate(t3, st3, f.params);
  Tensor loss = neural_ndcg_loss(t3, scored.scores, s.one_hot_labels(), {1.0, 10, {}});
  dirty_grads = t3.backward(loss);

  CHECK(loss.value() == clean);
  for (const auto& leaf : leaves) {
    CHECK(clean_grads.at(leaf) == dirty_grads.at(leaf));
  }
}

TEST_CASE("cold start scores content only") {
  Fixture f;
  Slate s = tiny_slate();
  s.history.clear();
  Tape tape;
  SlateTensors st = encode_slate(tape, s, f.enc, f.params);
  SlateScores out = score_slate(tape, st, f.params);
  CHECK(out.scores.size() == s.candidates.size());
  for (double a : out.alpha.data()) CHECK(a == 0.0);
  for (double v : out.scores.data()) CHECK(std::isfinite(v));
}

TEST_CASE("end-to-end gradients: DIN + neuralNDCG and DIN + pointwise") {
  Fixture f;
  Slate s = tiny_slate();  // 3 candidates, 4 actions
  auto leaves = param_leaves(f.params);

  const double err_listwise = max_grad_rel_err(
      leaves, [&](Tape& t, const std::vector<Tensor>& l) {
        DinParams p = with_leaves(f.params, l);
        SlateScores scored = score_slate(t, encode_slate(t, s, f.enc, p), p);
        return neural_ndcg_loss(t, scored.scores, s.one_hot_labels(), {1.0, 10, {}});
      });
  CHECK(err_listwise < 1e-4);

  const double err_pointwise = max_grad_rel_err(
      leaves, [&](Tape& t, const std::vector<Tensor>& l) {
        DinParams p = with_leaves(f.params, l);
        SlateScores scored = score_slate(t, encode_slate(t, s, f.enc, p), p);
        return pointwise_loss(t, scored.scores, s.one_hot_labels());
      });
  CHECK(err_pointwise < 1e-4);
}

TEST_SUITE_END();
