#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "matchrank/data.hpp"
#include "matchrank/encoding.hpp"
#include "matchrank/model.hpp"

namespace matchrank {

// Candidates ordered by descending score; ties keep the original index order
// (stable), so reruns and regression tests see one fixed ranking.
std::vector<std::size_t> ranking_order(std::span<const double> scores);

// gain 2^y - 1, discount 1/log2(rank+1) with 1-based ranks, normalized by
// the ideal DCG@k. Throws on all-zero labels.
double ndcg_at_k(std::span<const double> scores, std::span<const double> labels,
                 std::size_t k);

// |positives in top-k| / |positives|. Throws on all-zero labels.
double recall_at_k(std::span<const double> scores, std::span<const double> labels,
                   std::size_t k);

struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<double> ndcg;    // aligned with ks
  std::vector<double> recall;  // aligned with ks
  std::size_t n_slates = 0;

  std::string to_text() const;  // key-value lines, e.g. "ndcg@1 0.6445"
  double ndcg_at(std::size_t k) const;
  double recall_at(std::size_t k) const;
};

struct EvalConfig {
  std::vector<std::size_t> ks = {1, 3, 5};
  std::size_t threads = 1;
};

// Macro average of per-slate metrics. Per-slate values are computed
// independently (optionally in parallel) and reduced in slate order, so the
// result is identical for any thread count.
MetricReport evaluate(const DinParams& params, const EncodingConfig& enc,
                      const std::vector<Slate>& slates, const EvalConfig& cfg = {});

}  // namespace matchrank
