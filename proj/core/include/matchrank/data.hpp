#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "matchrank/errors.hpp"

namespace matchrank {

// Candidate entry window: matches start within 24 hours of the request.
inline constexpr std::int64_t kCandidateWindowSeconds = 86400;

struct MatchClick {
  bool operator==(const MatchClick&) const = default;
};
struct TeamSave {
  bool operator==(const TeamSave&) const = default;
};
struct ContestJoin {
  std::int64_t num_contests = 1;  // >= 1
  double total_entry_fee = 0.0;   // >= 0
  bool operator==(const ContestJoin&) const = default;
};
using Interaction = std::variant<MatchClick, TeamSave, ContestJoin>;

inline std::size_t interaction_index(const Interaction& it) { return it.index(); }
inline const char* interaction_name(const Interaction& it) {
  static constexpr const char* names[] = {"click", "team_save", "contest_join"};
  return names[it.index()];
}

// One past (match, timestamp, features) tuple, enriched by interaction kind.
// ttrl/lineup fields are the match state relative to the action time.
struct HistoricalAction {
  std::int32_t sport = 0;
  std::int32_t format = 0;
  std::int64_t t = 0;  // unix seconds
  Interaction interaction;
  std::int64_t ttrl_at_action = 0;  // seconds to round lock at time t, >= 0
  bool lineups_out = false;
  double max_prize = 0.0;

  bool operator==(const HistoricalAction&) const = default;
};

// Real-time feature vector of one candidate match at request time.
struct CandidateFeatures {
  std::int32_t sport = 0;
  std::int32_t format = 0;
  std::int64_t ttrl = 0;  // seconds, in (0, 86400]
  std::optional<std::int64_t> time_since_lineups;  // absent until lineups announced
  double max_prize = 0.0;

  bool operator==(const CandidateFeatures&) const = default;
};

// One ranking instance: history + candidate set + single positive label.
struct Slate {
  std::string user_id;
  std::int64_t t_c = 0;  // request unix seconds
  std::vector<HistoricalAction> history;  // time ascending, most recent last
  std::vector<CandidateFeatures> candidates;
  std::int32_t label = 0;  // index of the positive candidate

  bool operator==(const Slate&) const = default;

  std::vector<double> one_hot_labels() const {
    std::vector<double> y(candidates.size(), 0.0);
    y[static_cast<std::size_t>(label)] = 1.0;
    return y;
  }
};

// Throws DataError describing the first violated invariant.
inline void validate_slate(const Slate& s) {
  if (s.candidates.size() < 2) {
    throw DataError("slate: needs at least 2 candidates, got " +
                    std::to_string(s.candidates.size()));
  }
  if (s.label < 0 || static_cast<std::size_t>(s.label) >= s.candidates.size()) {
    throw DataError("slate: label " + std::to_string(s.label) + " out of range [0, " +
                    std::to_string(s.candidates.size()) + ")");
  }
  std::int64_t prev_t = std::numeric_limits<std::int64_t>::min();
  for (const auto& a : s.history) {
    if (a.t < prev_t) throw DataError("slate: history timestamps decrease at t=" +
                                      std::to_string(a.t));
    prev_t = a.t;
    if (a.t >= s.t_c) {
      throw DataError("slate: history action at t=" + std::to_string(a.t) +
                      " does not precede request t_c=" + std::to_string(s.t_c));
    }
    if (a.ttrl_at_action < 0) throw DataError("slate: negative ttrl_at_action");
    if (a.max_prize < 0) throw DataError("slate: negative max_prize in history");
    if (const auto* join = std::get_if<ContestJoin>(&a.interaction)) {
      if (join->num_contests < 1) throw DataError("slate: contest_join num_contests < 1");
      if (join->total_entry_fee < 0) throw DataError("slate: negative total_entry_fee");
    }
  }
  for (const auto& c : s.candidates) {
    if (c.ttrl <= 0 || c.ttrl > kCandidateWindowSeconds) {
      throw DataError("slate: candidate ttrl " + std::to_string(c.ttrl) +
                      " outside (0, " + std::to_string(kCandidateWindowSeconds) + "]");
    }
    if (c.time_since_lineups && *c.time_since_lineups < 0) {
      throw DataError("slate: negative time_since_lineups");
    }
    if (c.max_prize < 0) throw DataError("slate: negative candidate max_prize");
  }
}

}  // namespace matchrank
