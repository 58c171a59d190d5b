#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// here (finite differences, counting-based ranking metrics) deliberately
// avoid the library's own code paths.

#include <cmath>
#include <functional>
#include <vector>

#include "matchrank/data.hpp"
#include "matchrank/encoding.hpp"
#include "matchrank/model.hpp"
#include "matchrank/rng.hpp"
#include "matchrank/tensor.hpp"

namespace matchrank::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true,
                            double lo = -1.0, double hi = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

// Random values bounded away from zero, for ops with a kink at the origin.
inline Tensor random_tensor_off_zero(Shape shape, Rng& rng, bool requires_grad = true) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.next_double() < 0.5 ? -mag : mag;
  }
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

// Builds a scalar loss from replacement leaves; called with fresh tapes.
using LossBuilder = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

inline double relative_error(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8});
}

// Central finite differences against the tape gradients, h = 1e-5 by
// default; returns the worst componentwise relative error over all leaves.
//
// Central differences cannot resolve a derivative below the rounding noise
// of the loss itself, ~ulp(f)/2h. Directions with mathematically zero
// gradient (a softmax-cancelled bias, a uniform score shift under a
// rank-based loss) land exactly there, so differences inside that noise
// floor count as agreement. Everything above it is held to the relative
// tolerance unchanged.
inline double max_grad_rel_err(const std::vector<Tensor>& leaves,
                               const LossBuilder& build, double h = 1e-5) {
  Tape tape;
  Tensor loss = build(tape, leaves);
  GradientMap grads = tape.backward(loss);

  auto eval_at = [&](std::size_t leaf, std::size_t comp, double delta) {
    std::vector<Tensor> replaced = leaves;
    std::vector<double> data = leaves[leaf].data();
    data[comp] += delta;
    replaced[leaf] = Tensor(leaves[leaf].shape(), std::move(data),
                            leaves[leaf].requires_grad());
    Tape fwd(false);
    return build(fwd, replaced).value();
  };

  const std::vector<double> zeros_fallback;
  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const std::vector<double>* analytic = grads.find(leaves[li]);
    for (std::size_t c = 0; c < leaves[li].size(); ++c) {
      const double fp = eval_at(li, c, h);
      const double fm = eval_at(li, c, -h);
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic ? (*analytic)[c] : 0.0;
      const double noise_floor =
          8.0 * 2.220446049250313e-16 * std::max({std::fabs(fp), std::fabs(fm), 1.0}) /
          (2.0 * h);
      if (std::fabs(a - numeric) <= noise_floor) continue;
      worst = std::max(worst, relative_error(a, numeric));
    }
  }
  return worst;
}

// --- counting-based ranking oracle -----------------------------------------
// rank(i) = 1 + |{j : s_j > s_i or (s_j == s_i and j < i)}|, the same stable
// tie rule as the implementation but derived without sorting.

inline std::vector<std::size_t> oracle_ranks(const std::vector<double>& scores) {
  std::vector<std::size_t> rank(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t above = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++above;
    }
    rank[i] = above + 1;
  }
  return rank;
}

inline double oracle_ndcg_at_k(const std::vector<double>& scores,
                               const std::vector<double>& labels, std::size_t k) {
  const auto ranks = oracle_ranks(scores);
  const std::size_t cut = std::min(k, scores.size());
  auto gain = [](double y) { return std::exp2(y) - 1.0; };
  double dcg = 0.0;
  for (std::size_t r = 1; r <= cut; ++r) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (ranks[i] == r) {
        dcg += gain(labels[i]) * (1.0 / std::log2(static_cast<double>(r) + 1.0));
      }
    }
  }
  const auto ideal_ranks = oracle_ranks(labels);
  double idcg = 0.0;
  for (std::size_t r = 1; r <= cut; ++r) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (ideal_ranks[i] == r) {
        idcg += gain(labels[i]) * (1.0 / std::log2(static_cast<double>(r) + 1.0));
      }
    }
  }
  return dcg / idcg;
}

inline double oracle_recall_at_k(const std::vector<double>& scores,
                                 const std::vector<double>& labels, std::size_t k) {
  const auto ranks = oracle_ranks(scores);
  const std::size_t cut = std::min(k, scores.size());
  double hits = 0.0, total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 0.0) {
      total += 1.0;
      if (ranks[i] <= cut) hits += 1.0;
    }
  }
  return hits / total;
}

// --- tiny fixtures -----------------------------------------------------------

inline EncodingConfig tiny_encoding() {
  EncodingConfig cfg;
  cfg.sports = {"cricket", "football", "kabaddi"};
  cfg.formats = {"t20", "odi"};
  cfg.h_max = 4;
  cfg.delta_t_buckets = {60, 3600, 86400};
  cfg.d_sport = 3;
  cfg.d_format = 2;
  cfg.d_interaction = 2;
  cfg.d_bucket = 2;
  return cfg;
}

inline ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.attention_hidden = 4;
  cfg.mlp_hidden = {8, 4};
  return cfg;
}

inline HistoricalAction make_action(std::int32_t sport, std::int32_t format,
                                    std::int64_t t, Interaction kind,
                                    std::int64_t ttrl = 7200, bool lineups = false,
                                    double prize = 40000.0) {
  HistoricalAction a;
  a.sport = sport;
  a.format = format;
  a.t = t;
  a.interaction = kind;
  a.ttrl_at_action = ttrl;
  a.lineups_out = lineups;
  a.max_prize = prize;
  return a;
}

inline CandidateFeatures make_candidate(std::int32_t sport, std::int32_t format,
                                        std::int64_t ttrl,
                                        std::optional<std::int64_t> tsl = std::nullopt,
                                        double prize = 50000.0) {
  CandidateFeatures c;
  c.sport = sport;
  c.format = format;
  c.ttrl = ttrl;
  c.time_since_lineups = tsl;
  c.max_prize = prize;
  return c;
}

// 4 history actions, 3 candidates; valid under tiny_encoding()
inline Slate tiny_slate(std::int64_t t_c = 1700000000) {
  Slate s;
  s.user_id = "u0000001";
  s.t_c = t_c;
  s.history = {
      make_action(0, 0, t_c - 86400 * 3, MatchClick{}, 3600, false, 20000.0),
      make_action(1, 1, t_c - 86400, TeamSave{}, 7200, true, 90000.0),
      make_action(0, 1, t_c - 3600, ContestJoin{3, 150.0}, 1800, true, 60000.0),
      make_action(2, 0, t_c - 600, MatchClick{}, 600, false, 15000.0),
  };
  s.candidates = {
      make_candidate(0, 0, 1800, 900, 75000.0),
      make_candidate(1, 1, 43200, std::nullopt, 30000.0),
      make_candidate(2, 0, 7200, 60, 10000.0),
  };
  s.label = 0;
  return s;
}

// Random valid slate for property tests.
inline Slate random_slate(Rng& rng, const EncodingConfig& enc, std::size_t max_history,
                          std::size_t min_m = 2, std::size_t max_m = 6) {
  Slate s;
  s.user_id = "u0000042";
  s.t_c = 1700000000 + rng.uniform_int(0, 1000000);
  const auto n_hist = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_history)));
  std::int64_t t = s.t_c - 86400 * 30;
  for (std::size_t i = 0; i < n_hist; ++i) {
    t += rng.uniform_int(1, 86400);
    if (t >= s.t_c) break;
    Interaction kind;
    switch (rng.uniform_int(0, 2)) {
      case 0: kind = MatchClick{}; break;
      case 1: kind = TeamSave{}; break;
      default: kind = ContestJoin{1 + rng.geometric(0.5), rng.uniform(10.0, 500.0)};
    }
    s.history.push_back(make_action(
        static_cast<std::int32_t>(rng.uniform_int(0, static_cast<std::int64_t>(enc.sports.size()) - 1)),
        static_cast<std::int32_t>(rng.uniform_int(0, static_cast<std::int64_t>(enc.formats.size()) - 1)),
        t, kind, rng.uniform_int(0, 86400), rng.next_double() < 0.5,
        rng.uniform(1000.0, 200000.0)));
  }
  const auto m = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(min_m), static_cast<std::int64_t>(max_m)));
  for (std::size_t i = 0; i < m; ++i) {
    std::optional<std::int64_t> tsl;
    if (rng.next_double() < 0.5) tsl = rng.uniform_int(0, 7200);
    s.candidates.push_back(make_candidate(
        static_cast<std::int32_t>(rng.uniform_int(0, static_cast<std::int64_t>(enc.sports.size()) - 1)),
        static_cast<std::int32_t>(rng.uniform_int(0, static_cast<std::int64_t>(enc.formats.size()) - 1)),
        rng.uniform_int(1, 86400), tsl, rng.uniform(1000.0, 200000.0)));
  }
  s.label = static_cast<std::int32_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1));
  return s;
}

}  // namespace matchrank::testing
