#include "matchrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace matchrank {

std::vector<std::size_t> ranking_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

namespace {

void require_positive(std::span<const double> labels, const char* op) {
  for (double y : labels) {
    if (y > 0.0) return;
  }
  throw ValueError(std::string(op) + ": degenerate slate with no positive label");
}

double gain(double y) { return std::exp2(y) - 1.0; }
double rank_discount(std::size_t rank1) {  // 1-based
  return 1.0 / std::log2(static_cast<double>(rank1) + 1.0);
}

}  // namespace

double ndcg_at_k(std::span<const double> scores, std::span<const double> labels,
                 std::size_t k) {
  if (scores.size() != labels.size()) {
    throw ShapeError("ndcg_at_k: scores/labels size mismatch");
  }
  require_positive(labels, "ndcg_at_k");
  const std::size_t cut = std::min(k, scores.size());
  const auto order = ranking_order(scores);
  double dcg = 0.0;
  for (std::size_t r = 0; r < cut; ++r) dcg += gain(labels[order[r]]) * rank_discount(r + 1);
  std::vector<double> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < cut; ++r) idcg += gain(ideal[r]) * rank_discount(r + 1);
  return dcg / idcg;
}

double recall_at_k(std::span<const double> scores, std::span<const double> labels,
                   std::size_t k) {
  if (scores.size() != labels.size()) {
    throw ShapeError("recall_at_k: scores/labels size mismatch");
  }
  require_positive(labels, "recall_at_k");
  const std::size_t cut = std::min(k, scores.size());
  const auto order = ranking_order(scores);
  std::size_t hits = 0, total = 0;
  for (double y : labels) total += y > 0.0 ? 1 : 0;
  for (std::size_t r = 0; r < cut; ++r) hits += labels[order[r]] > 0.0 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "slates " << n_slates << '\n';
  for (std::size_t i = 0; i < ks.size(); ++i) {
    os << "ndcg@" << ks[i] << ' ' << ndcg[i] << '\n';
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    os << "recall@" << ks[i] << ' ' << recall[i] << '\n';
  }
  return os.str();
}

double MetricReport::ndcg_at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return ndcg[i];
  }
  throw ValueError("metric report: no ndcg@" + std::to_string(k));
}

double MetricReport::recall_at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return recall[i];
  }
  throw ValueError("metric report: no recall@" + std::to_string(k));
}

MetricReport evaluate(const DinParams& params, const EncodingConfig& enc,
                      const std::vector<Slate>& slates, const EvalConfig& cfg) {
  if (slates.empty()) throw ValueError("evaluate: empty dataset");
  const std::size_t n = slates.size();
  const std::size_t nk = cfg.ks.size();
  // per-slate values first, reduced afterwards in slate order
  std::vector<double> per_slate(n * 2 * nk);

  auto worker = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Tape tape(false);
      SlateTensors st = encode_slate(tape, slates[i], enc, params);
      SlateScores scored = score_slate(tape, st, params);
      const auto& scores = scored.scores.data();
      const auto labels = slates[i].one_hot_labels();
      for (std::size_t j = 0; j < nk; ++j) {
        per_slate[i * 2 * nk + j] = ndcg_at_k(scores, labels, cfg.ks[j]);
        per_slate[i * 2 * nk + nk + j] = recall_at_k(scores, labels, cfg.ks[j]);
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, cfg.threads);
  if (threads == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  MetricReport report;
  report.ks = cfg.ks;
  report.ndcg.assign(nk, 0.0);
  report.recall.assign(nk, 0.0);
  report.n_slates = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < nk; ++j) {
      report.ndcg[j] += per_slate[i * 2 * nk + j];
      report.recall[j] += per_slate[i * 2 * nk + nk + j];
    }
  }
  for (std::size_t j = 0; j < nk; ++j) {
    report.ndcg[j] /= static_cast<double>(n);
    report.recall[j] /= static_cast<double>(n);
  }
  return report;
}

}  // namespace matchrank
