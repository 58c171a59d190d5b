#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchrank/data.hpp"
#include "matchrank/tensor.hpp"

namespace matchrank {

struct DinParams;  // model.hpp

// Controls how raw interactions/candidates become fixed-width vectors.
// Widths are a pure function of this config; the ablation flags zero feature
// slots instead of removing them so every variant shares one architecture.
struct EncodingConfig {
  std::vector<std::string> sports;
  std::vector<std::string> formats;
  std::size_t h_max = 50;
  // time-gap bucket boundaries, seconds, strictly increasing;
  // bucket(dt) = index of first boundary strictly greater than dt
  std::vector<std::int64_t> delta_t_buckets = {60,    600,    3600,   21600,
                                               86400, 604800, 2592000};
  std::size_t d_sport = 8;
  std::size_t d_format = 8;
  std::size_t d_interaction = 4;
  std::size_t d_bucket = 8;
  // heavy-tailed numerics enter as log1p(x) * scale
  double scale_seconds = 1.0 / 16.0;
  double scale_currency = 1.0 / 16.0;
  double scale_count = 1.0 / 4.0;
  bool use_urgency_features = true;
  bool use_positional_encoding = true;

  std::size_t n_buckets() const { return delta_t_buckets.size() + 1; }
  static constexpr std::size_t kHistoryNumerics = 5;
  static constexpr std::size_t kCandidateNumerics = 4;
  std::size_t d_history() const {
    return d_sport + d_format + d_interaction + kHistoryNumerics + d_bucket + 1;
  }
  std::size_t d_candidate() const { return d_sport + d_format + kCandidateNumerics; }

  void validate() const;
};

std::size_t delta_t_bucket(std::int64_t delta_t, const EncodingConfig& cfg);

// v(a_j): sport emb + format emb + interaction emb + numerics + time-gap
// bucket emb + log1p time-gap scalar. Positional slots are zeroed when
// use_positional_encoding is off.
Tensor encode_history_action(Tape& tape, const HistoricalAction& a, std::int64_t t_c,
                             const EncodingConfig& cfg, const DinParams& params);

// z_i: sport emb + format emb + [ttrl, lineups flag, time-since-lineups,
// max prize] numerics. Urgency slots are zeroed when use_urgency_features
// is off; the contextual prize slot is kept.
Tensor encode_candidate(Tape& tape, const CandidateFeatures& c,
                        const EncodingConfig& cfg, const DinParams& params);

struct SlateTensors {
  Tensor history;             // {h_max, d_history}, right-aligned, zero padding
  std::vector<bool> mask;     // {h_max}, true where a real action sits
  Tensor candidates;          // {m, d_candidate}
  Tensor labels;              // {m}, constant one-hot
  std::size_t n_candidates = 0;
  bool any_history = false;
};

// History longer than h_max keeps the most recent h_max actions.
SlateTensors encode_slate(Tape& tape, const Slate& s, const EncodingConfig& cfg,
                          const DinParams& params);

}  // namespace matchrank
