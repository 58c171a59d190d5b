#include <cmath>

#include "doctest.h"
#include "matchrank/metrics.hpp"
#include "test_helpers.hpp"

using namespace matchrank;
using namespace matchrank::testing;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("ndcg examples") {
  const std::vector<double> labels = {0.0, 1.0, 0.0};
  // positive ranked first
  CHECK(ndcg_at_k({{3.0, 5.0, 1.0}}, labels, 1) == 1.0);
  CHECK(ndcg_at_k({{3.0, 5.0, 1.0}}, labels, 3) == 1.0);
  CHECK(ndcg_at_k({{3.0, 5.0, 1.0}}, labels, 5) == 1.0);
  // positive ranked second
  CHECK(ndcg_at_k({{5.0, 3.0, 1.0}}, labels, 1) == 0.0);
  CHECK(ndcg_at_k({{5.0, 3.0, 1.0}}, labels, 3) ==
        doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
}

TEST_CASE("recall examples") {
  const std::vector<double> labels = {0.0, 1.0, 0.0, 0.0};
  CHECK(recall_at_k({{1.0, 9.0, 2.0, 3.0}}, labels, 1) == 1.0);
  // positive at rank 4
  CHECK(recall_at_k({{5.0, 1.0, 3.0, 2.0}}, labels, 3) == 0.0);
  // positive at rank 2
  const std::vector<double> scores = {5.0, 4.0, 1.0, 0.5};
  CHECK(recall_at_k(scores, labels, 1) == 0.0);
  CHECK(recall_at_k(scores, labels, 3) == 1.0);
  CHECK(recall_at_k(scores, labels, 5) == 1.0);
}

TEST_CASE("degenerate labels are rejected") {
  CHECK_THROWS_AS(ndcg_at_k({{1.0, 2.0}}, {{0.0, 0.0}}, 1), ValueError);
  CHECK_THROWS_AS(recall_at_k({{1.0, 2.0}}, {{0.0, 0.0}}, 1), ValueError);
}

TEST_CASE("ties break by original index") {
  const std::vector<double> scores = {1.0, 1.0};
  // index 0 wins the tie, so the positive at index 1 sits at rank 2
  CHECK(ndcg_at_k(scores, {{0.0, 1.0}}, 1) == 0.0);
  CHECK(ndcg_at_k(scores, {{1.0, 0.0}}, 1) == 1.0);
}

TEST_CASE("metrics agree with the counting oracle") {
  Rng rng(51);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
    std::vector<double> scores(m), labels(m, 0.0);
    for (auto& s : scores) s = rng.uniform(-1.0, 1.0);
    if (rng.next_double() < 0.2) scores[0] = scores[m - 1];  // force ties sometimes
    labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1))] = 1.0;
    if (rng.next_double() < 0.3) {
      labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1))] = 2.0;
    }
    for (std::size_t k : {1, 3, 5}) {
      CHECK(ndcg_at_k(scores, labels, k) == oracle_ndcg_at_k(scores, labels, k));
      CHECK(recall_at_k(scores, labels, k) == oracle_recall_at_k(scores, labels, k));
    }
  }
}

TEST_CASE("recall@1 equals ndcg@1 on single-positive slates") {
  Rng rng(52);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
    std::vector<double> scores(m), labels(m, 0.0);
    for (auto& s : scores) s = rng.uniform(-1.0, 1.0);
    labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1))] = 1.0;
    CHECK(recall_at_k(scores, labels, 1) == ndcg_at_k(scores, labels, 1));
  }
}

TEST_CASE("ndcg is monotone in k") {
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
    std::vector<double> scores(m), labels(m, 0.0);
    for (auto& s : scores) s = rng.uniform(-1.0, 1.0);
    labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1))] = 1.0;
    double prev = 0.0;
    for (std::size_t k = 1; k <= m + 2; ++k) {
      const double v = ndcg_at_k(scores, labels, k);
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("metrics are invariant to monotone score transforms") {
  Rng rng(54);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_int(0, 6));
    std::vector<double> scores(m), labels(m, 0.0);
    for (auto& s : scores) s = rng.uniform(-2.0, 2.0);
    labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1))] = 1.0;
    std::vector<double> warped(m);
    for (std::size_t i = 0; i < m; ++i) warped[i] = 3.0 * std::tanh(scores[i]) + 7.0;
    for (std::size_t k : {1, 2, 3}) {
      CHECK(ndcg_at_k(scores, labels, k) == ndcg_at_k(warped, labels, k));
      CHECK(recall_at_k(scores, labels, k) == recall_at_k(warped, labels, k));
    }
  }
}

TEST_CASE("random scores on m=10 single-positive slates average ndcg@1 near 0.1") {
  Rng rng(55);
  double total = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::vector<double> scores(10), labels(10, 0.0);
    for (auto& s : scores) s = rng.next_double();
    labels[static_cast<std::size_t>(rng.uniform_int(0, 9))] = 1.0;
    total += ndcg_at_k(scores, labels, 1);
  }
  CHECK(std::fabs(total / n - 0.1) < 0.02);
}

TEST_CASE("evaluate on datasets") {
  EncodingConfig enc = tiny_encoding();
  DinParams params = DinParams::init(enc, tiny_model(), 5);

  CHECK_THROWS_AS(evaluate(params, enc, {}, {}), ValueError);

  Rng rng(56);
  std::vector<Slate> slates;
  for (int i = 0; i < 40; ++i) slates.push_back(random_slate(rng, enc, 5));

  MetricReport a = evaluate(params, enc, slates);
  CHECK(a.n_slates == slates.size());
  for (double v : a.ndcg) CHECK((v >= 0.0 && v <= 1.0));
  for (double v : a.recall) CHECK((v >= 0.0 && v <= 1.0));

  // deterministic, and parallel equals sequential exactly
  MetricReport b = evaluate(params, enc, slates);
  CHECK(a.ndcg == b.ndcg);
  CHECK(a.recall == b.recall);
  MetricReport c = evaluate(params, enc, slates, {{1, 3, 5}, 2});
  CHECK(a.ndcg == c.ndcg);
  CHECK(a.recall == c.recall);

  // duplicating the dataset leaves the means unchanged
  std::vector<Slate> doubled = slates;
  doubled.insert(doubled.end(), slates.begin(), slates.end());
  MetricReport d = evaluate(params, enc, doubled);
  for (std::size_t i = 0; i < a.ndcg.size(); ++i) {
    CHECK(d.ndcg[i] == doctest::Approx(a.ndcg[i]).epsilon(1e-12));
  }

  // single slate with the positive on top: every metric is 1
  Slate s = tiny_slate();
  Tape tape;
  SlateScores scored = score_slate(tape, encode_slate(tape, s, enc, params), params);
  s.label = static_cast<std::int32_t>(ranking_order(scored.scores.data())[0]);
  MetricReport top = evaluate(params, enc, {s});
  for (double v : top.ndcg) CHECK(v == 1.0);
  for (double v : top.recall) CHECK(v == 1.0);
}

TEST_CASE("report text round-trips the key facts") {
  MetricReport r;
  r.ks = {1, 3};
  r.ndcg = {0.5, 0.75};
  r.recall = {0.5, 0.9};
  r.n_slates = 7;
  const std::string text = r.to_text();
  CHECK(text.find("slates 7") != std::string::npos);
  CHECK(text.find("ndcg@1 0.5") != std::string::npos);
  CHECK(text.find("recall@3 0.9") != std::string::npos);
  CHECK(r.ndcg_at(3) == 0.75);
  CHECK_THROWS_AS(r.ndcg_at(5), ValueError);
}

TEST_SUITE_END();
