#include "matchrank/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "matchrank/model.hpp"

namespace matchrank {

void EncodingConfig::validate() const {
  if (sports.empty()) throw ConfigError("encoding: sports vocabulary is empty");
  if (formats.empty()) throw ConfigError("encoding: formats vocabulary is empty");
  if (h_max == 0) throw ConfigError("encoding: h_max must be positive");
  if (delta_t_buckets.empty()) throw ConfigError("encoding: delta_t_buckets is empty");
  for (std::size_t i = 1; i < delta_t_buckets.size(); ++i) {
    if (delta_t_buckets[i] <= delta_t_buckets[i - 1]) {
      throw ConfigError("encoding: delta_t_buckets must be strictly increasing at index " +
                        std::to_string(i));
    }
  }
  if (d_sport == 0 || d_format == 0 || d_interaction == 0 || d_bucket == 0) {
    throw ConfigError("encoding: embedding dims must be positive");
  }
}

std::size_t delta_t_bucket(std::int64_t delta_t, const EncodingConfig& cfg) {
  const auto& b = cfg.delta_t_buckets;
  const auto it = std::upper_bound(b.begin(), b.end(), delta_t);
  return static_cast<std::size_t>(it - b.begin());
}

namespace {

double log1p_scaled(double x, double scale) { return std::log1p(x) * scale; }

}  // namespace

Tensor encode_history_action(Tape& tape, const HistoricalAction& a, std::int64_t t_c,
                             const EncodingConfig& cfg, const DinParams& params) {
  if (a.t > t_c) {
    throw ValueError("encode_history_action: action at t=" + std::to_string(a.t) +
                     " is after request t_c=" + std::to_string(t_c));
  }
  std::vector<Tensor> parts;
  parts.reserve(6);
  parts.push_back(tape.gather_row(params.sport_embedding, static_cast<std::size_t>(a.sport)));
  parts.push_back(tape.gather_row(params.format_embedding, static_cast<std::size_t>(a.format)));
  parts.push_back(
      tape.gather_row(params.interaction_embedding, interaction_index(a.interaction)));

  std::vector<double> numerics(EncodingConfig::kHistoryNumerics, 0.0);
  numerics[0] = log1p_scaled(static_cast<double>(a.ttrl_at_action), cfg.scale_seconds);
  numerics[1] = a.lineups_out ? 1.0 : 0.0;
  numerics[2] = log1p_scaled(a.max_prize, cfg.scale_currency);
  if (const auto* join = std::get_if<ContestJoin>(&a.interaction)) {
    numerics[3] = log1p_scaled(static_cast<double>(join->num_contests), cfg.scale_count);
    numerics[4] = log1p_scaled(join->total_entry_fee, cfg.scale_currency);
  }
  parts.push_back(Tensor({EncodingConfig::kHistoryNumerics}, std::move(numerics)));

  const std::int64_t delta_t = t_c - a.t;
  if (cfg.use_positional_encoding) {
    parts.push_back(
        tape.gather_row(params.bucket_embedding, delta_t_bucket(delta_t, cfg)));
    parts.push_back(Tensor(
        {1}, {log1p_scaled(static_cast<double>(delta_t), cfg.scale_seconds)}));
  } else {
    parts.push_back(Tensor::zeros({cfg.d_bucket}));
    parts.push_back(Tensor::zeros({1}));
  }
  return tape.concat(parts);
}

Tensor encode_candidate(Tape& tape, const CandidateFeatures& c,
                        const EncodingConfig& cfg, const DinParams& params) {
  if (c.ttrl <= 0 || c.ttrl > kCandidateWindowSeconds) {
    throw ValueError("encode_candidate: ttrl " + std::to_string(c.ttrl) +
                     " outside the (0, " + std::to_string(kCandidateWindowSeconds) +
                     "] candidate window");
  }
  std::vector<Tensor> parts;
  parts.reserve(3);
  parts.push_back(tape.gather_row(params.sport_embedding, static_cast<std::size_t>(c.sport)));
  parts.push_back(tape.gather_row(params.format_embedding, static_cast<std::size_t>(c.format)));

  std::vector<double> numerics(EncodingConfig::kCandidateNumerics, 0.0);
  if (cfg.use_urgency_features) {
    numerics[0] = log1p_scaled(static_cast<double>(c.ttrl), cfg.scale_seconds);
    numerics[1] = c.time_since_lineups ? 1.0 : 0.0;
    numerics[2] = log1p_scaled(
        c.time_since_lineups ? static_cast<double>(*c.time_since_lineups) : 0.0,
        cfg.scale_seconds);
  }
  numerics[3] = log1p_scaled(c.max_prize, cfg.scale_currency);
  parts.push_back(Tensor({EncodingConfig::kCandidateNumerics}, std::move(numerics)));
  return tape.concat(parts);
}

SlateTensors encode_slate(Tape& tape, const Slate& s, const EncodingConfig& cfg,
                          const DinParams& params) {
  SlateTensors out;
  out.n_candidates = s.candidates.size();

  const std::size_t kept =
      std::min(s.history.size(), cfg.h_max);  // most recent h_max actions
  const std::size_t pad = cfg.h_max - kept;
  out.mask.assign(cfg.h_max, false);
  out.any_history = kept > 0;

  std::vector<Tensor> rows;
  rows.reserve(cfg.h_max);
  const Tensor zero_row = Tensor::zeros({cfg.d_history()});
  for (std::size_t i = 0; i < pad; ++i) rows.push_back(zero_row);
  const std::size_t first = s.history.size() - kept;
  for (std::size_t i = 0; i < kept; ++i) {
    rows.push_back(
        encode_history_action(tape, s.history[first + i], s.t_c, cfg, params));
    out.mask[pad + i] = true;
  }
  out.history = tape.stack_rows(rows);

  std::vector<Tensor> cand_rows;
  cand_rows.reserve(out.n_candidates);
  for (const auto& c : s.candidates) {
    cand_rows.push_back(encode_candidate(tape, c, cfg, params));
  }
  out.candidates = tape.stack_rows(cand_rows);
  out.labels = Tensor({out.n_candidates}, s.one_hot_labels());
  return out;
}

}  // namespace matchrank
