#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "matchrank/data.hpp"
#include "matchrank/rng.hpp"

namespace matchrank {

struct ArchetypeRange {
  std::array<double, 2> beta_u{0.25, 1.0};       // urgency sensitivity
  std::array<double, 2> half_life_days{5, 30};   // recency decay
  double affinity_scale = 1.0;                   // stddev of sport affinity draws
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t n_users = 10000;
  std::size_t n_matches = 5000;
  std::vector<std::string> sports = {"cricket", "football", "basketball", "kabaddi"};
  std::vector<double> sport_weights = {0.5, 0.25, 0.15, 0.10};
  std::vector<std::string> formats = {"t20", "odi", "test", "t10", "league"};
  std::vector<double> format_weights = {0.35, 0.2, 0.1, 0.15, 0.2};
  double horizon_days = 90.0;
  std::int64_t start_epoch = 1700000000;
  double power_fraction = 0.3;
  ArchetypeRange power{{2.0, 4.0}, {2.0, 10.0}, 1.0};
  ArchetypeRange casual{{0.25, 1.0}, {5.0, 30.0}, 1.0};
  std::array<std::size_t, 2> slate_size{5, 12};
  std::array<std::size_t, 2> interactions_per_user{3, 8};
  double prize_log_mu = 10.8;  // exp(10.8) ~ 49k
  double prize_log_sigma = 1.0;
  double entry_fee_log_mu = 3.9;  // exp(3.9) ~ 49
  double entry_fee_log_sigma = 1.0;
  double lineup_lead_minutes_min = 15.0;
  double lineup_lead_minutes_max = 120.0;
  // disjoint-user, out-of-time split
  double train_user_frac = 0.7;
  double val_user_frac = 0.15;
  double train_time_frac = 0.6;
  double val_time_frac = 0.2;

  std::int64_t horizon_seconds() const {
    return static_cast<std::int64_t>(horizon_days * 86400.0);
  }
  void validate() const;
};

struct MatchInfo {
  std::int32_t sport = 0;
  std::int32_t format = 0;
  std::int64_t start = 0;        // round lock == start time
  std::int64_t lineup_time = 0;  // always before start
  double max_prize = 0.0;
};

// Per-user latents; together with the match schedule they reproduce every
// click probability the simulator sampled from.
struct UserTruth {
  std::string user_id;
  bool power = false;
  double beta_u = 0.0;
  double half_life_seconds = 0.0;
  std::vector<double> affinity;  // one per sport
};

struct ClickTruth {
  std::string user_id;
  std::int64_t t_c = 0;
  std::size_t match_index = 0;  // into the match schedule
  double log_prob = 0.0;        // log softmax prob over the full candidate window
};

struct GroundTruth {
  std::vector<MatchInfo> matches;
  std::vector<UserTruth> users;
  std::vector<ClickTruth> clicks;  // ordered like the slates
};

// behavior model constants
inline constexpr double kLineupBoost = 0.5;
inline constexpr double kRecencyScale = 0.8;
inline constexpr double kKindWeights[3] = {1.0, 1.5, 2.0};  // click, save, join

// Candidate features of a scheduled match as seen at request time.
CandidateFeatures candidate_at(const MatchInfo& m, std::int64_t t_c);

// Rises as the deadline approaches, plus a bump once lineups are out.
double urgency_of(const CandidateFeatures& c);

// affinity[sport] + beta_u * urgency + recency-weighted same-sport history.
// Shared by sampling and by ground-truth recomputation, so stored log
// probabilities reproduce exactly.
double click_logit(const UserTruth& user, const CandidateFeatures& c,
                   const std::vector<HistoricalAction>& history, std::int64_t t_c);

std::vector<MatchInfo> generate_matches(const SimConfig& cfg);

UserTruth draw_user(const SimConfig& cfg, std::size_t user_index);

struct UserStream {
  std::vector<Slate> slates;
  std::vector<ClickTruth> clicks;
  std::size_t skipped_requests = 0;  // candidate window had < 2 matches
};

UserStream simulate_user_stream(const UserTruth& user,
                                const std::vector<MatchInfo>& matches,
                                const SimConfig& cfg);

struct SimOutput {
  std::vector<Slate> slates;  // ordered by (user_id, t_c)
  GroundTruth truth;
  std::size_t skipped_requests = 0;
};

SimOutput generate_dataset(const SimConfig& cfg);

struct SplitDataset {
  std::vector<Slate> train, val, test;
};

// Users partitioned disjointly by a seed-keyed hash of the user id;
// validation/test slates are restricted to request times after the training
// period, so min(test t_c) > max(train t_c).
SplitDataset split_dataset(const std::vector<Slate>& slates, const SimConfig& cfg);

// Which split a user's id hashes to: 0 train, 1 val, 2 test.
int split_assignment(const std::string& user_id, const SimConfig& cfg);

}  // namespace matchrank
