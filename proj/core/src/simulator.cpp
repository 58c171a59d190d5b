#include "matchrank/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace matchrank {

void SimConfig::validate() const {
  if (n_users == 0) throw ConfigError("sim: n_users must be positive");
  if (n_matches == 0) throw ConfigError("sim: n_matches must be positive");
  if (sports.empty() || sports.size() != sport_weights.size()) {
    throw ConfigError("sim: sports and sport_weights must align and be non-empty");
  }
  if (formats.empty() || formats.size() != format_weights.size()) {
    throw ConfigError("sim: formats and format_weights must align and be non-empty");
  }
  auto check_weights = [](const std::vector<double>& w, const char* what) {
    double total = 0.0;
    for (double v : w) {
      if (v < 0.0) throw ConfigError(std::string("sim: negative weight in ") + what);
      total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw ConfigError(std::string("sim: ") + what + " must sum to 1");
    }
  };
  check_weights(sport_weights, "sport_weights");
  check_weights(format_weights, "format_weights");
  if (!(horizon_days > 0.0)) throw ConfigError("sim: horizon_days must be positive");
  if (power_fraction < 0.0 || power_fraction > 1.0) {
    throw ConfigError("sim: power_fraction must be in [0, 1]");
  }
  auto check_range = [](std::array<double, 2> r, const char* what) {
    if (r[0] > r[1]) throw ConfigError(std::string("sim: degenerate range for ") + what);
  };
  check_range(power.beta_u, "power.beta_u");
  check_range(power.half_life_days, "power.half_life_days");
  check_range(casual.beta_u, "casual.beta_u");
  check_range(casual.half_life_days, "casual.half_life_days");
  if (power.half_life_days[0] <= 0.0 || casual.half_life_days[0] <= 0.0) {
    throw ConfigError("sim: half-life must be positive");
  }
  if (slate_size[0] < 2 || slate_size[0] > slate_size[1]) {
    throw ConfigError("sim: slate_size range must satisfy 2 <= min <= max");
  }
  if (interactions_per_user[0] < 1 || interactions_per_user[0] > interactions_per_user[1]) {
    throw ConfigError("sim: interactions_per_user range must satisfy 1 <= min <= max");
  }
  if (!(lineup_lead_minutes_min > 0.0) || lineup_lead_minutes_min > lineup_lead_minutes_max) {
    throw ConfigError("sim: lineup lead range invalid");
  }
  if (train_user_frac <= 0.0 || val_user_frac <= 0.0 ||
      train_user_frac + val_user_frac >= 1.0) {
    throw ConfigError("sim: user split fractions must be positive and sum below 1");
  }
  if (train_time_frac <= 0.0 || val_time_frac <= 0.0 ||
      train_time_frac + val_time_frac >= 1.0) {
    throw ConfigError("sim: time split fractions must be positive and sum below 1");
  }
}

CandidateFeatures candidate_at(const MatchInfo& m, std::int64_t t_c) {
  CandidateFeatures c;
  c.sport = m.sport;
  c.format = m.format;
  c.ttrl = m.start - t_c;
  if (t_c >= m.lineup_time) c.time_since_lineups = t_c - m.lineup_time;
  c.max_prize = m.max_prize;
  return c;
}

double urgency_of(const CandidateFeatures& c) {
  const double base = std::log(static_cast<double>(kCandidateWindowSeconds) /
                               static_cast<double>(c.ttrl)) /
                      std::log(1440.0);
  return base + (c.time_since_lineups ? kLineupBoost : 0.0);
}

double click_logit(const UserTruth& user, const CandidateFeatures& c,
                   const std::vector<HistoricalAction>& history, std::int64_t t_c) {
  double recency = 0.0;
  for (const auto& a : history) {
    if (a.sport != c.sport) continue;
    const double age = static_cast<double>(t_c - a.t);
    recency += kKindWeights[interaction_index(a.interaction)] *
               std::exp2(-age / user.half_life_seconds);
  }
  return user.affinity[static_cast<std::size_t>(c.sport)] +
         user.beta_u * urgency_of(c) + kRecencyScale * recency;
}

std::vector<MatchInfo> generate_matches(const SimConfig& cfg) {
  cfg.validate();
  Rng rng = Rng(cfg.seed).derive("matches");
  std::vector<MatchInfo> out;
  out.reserve(cfg.n_matches);
  for (std::size_t i = 0; i < cfg.n_matches; ++i) {
    MatchInfo m;
    m.sport = static_cast<std::int32_t>(rng.categorical(cfg.sport_weights));
    m.format = static_cast<std::int32_t>(rng.categorical(cfg.format_weights));
    m.start = cfg.start_epoch + rng.uniform_int(0, cfg.horizon_seconds());
    const double lead_minutes =
        rng.uniform(cfg.lineup_lead_minutes_min, cfg.lineup_lead_minutes_max);
    m.lineup_time = m.start - static_cast<std::int64_t>(lead_minutes * 60.0);
    m.max_prize = rng.lognormal(cfg.prize_log_mu, cfg.prize_log_sigma);
    out.push_back(m);
  }
  return out;
}

UserTruth draw_user(const SimConfig& cfg, std::size_t user_index) {
  Rng rng = Rng(cfg.seed).derive("user-latents").derive(user_index);
  UserTruth u;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%07zu", user_index);
  u.user_id = buf;
  u.power = rng.next_double() < cfg.power_fraction;
  const ArchetypeRange& a = u.power ? cfg.power : cfg.casual;
  u.beta_u = rng.uniform(a.beta_u[0], a.beta_u[1]);
  u.half_life_seconds = rng.uniform(a.half_life_days[0], a.half_life_days[1]) * 86400.0;
  u.affinity.resize(cfg.sports.size());
  for (auto& v : u.affinity) v = rng.normal() * a.affinity_scale;
  return u;
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double mx = v.front();
  for (double x : v) mx = std::max(mx, x);
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

}  // namespace

UserStream simulate_user_stream(const UserTruth& user,
                                const std::vector<MatchInfo>& matches,
                                const SimConfig& cfg) {
  Rng rng = Rng(cfg.seed).derive("user-stream").derive(user.user_id);
  UserStream out;

  const auto n_requests = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(cfg.interactions_per_user[0]),
      static_cast<std::int64_t>(cfg.interactions_per_user[1])));
  std::vector<std::int64_t> request_times(n_requests);
  for (auto& t : request_times) {
    t = cfg.start_epoch + rng.uniform_int(0, cfg.horizon_seconds());
  }
  std::sort(request_times.begin(), request_times.end());
  for (std::size_t i = 1; i < request_times.size(); ++i) {
    if (request_times[i] <= request_times[i - 1]) {
      request_times[i] = request_times[i - 1] + 1;
    }
  }

  std::vector<HistoricalAction> history;
  for (const std::int64_t t_c : request_times) {
    std::vector<std::size_t> window;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const std::int64_t ttrl = matches[i].start - t_c;
      if (ttrl > 0 && ttrl <= kCandidateWindowSeconds) window.push_back(i);
    }
    if (window.size() < 2) {
      ++out.skipped_requests;
      continue;
    }

    std::vector<double> logits(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
      logits[i] = click_logit(user, candidate_at(matches[window[i]], t_c), history, t_c);
    }
    const double lse = log_sum_exp(logits);
    const double u = rng.next_double();
    std::size_t chosen = window.size() - 1;
    double cum = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
      cum += std::exp(logits[i] - lse);
      if (u < cum) {
        chosen = i;
        break;
      }
    }

    // click -> team save -> contest join escalation
    Interaction kind = MatchClick{};
    if (rng.next_double() < 0.5) {
      kind = TeamSave{};
      if (rng.next_double() < 0.5) {
        ContestJoin join;
        join.num_contests = 1 + rng.geometric(0.5);
        join.total_entry_fee =
            rng.lognormal(cfg.entry_fee_log_mu, cfg.entry_fee_log_sigma);
        kind = join;
      }
    }

    const std::size_t max_m = std::min(cfg.slate_size[1], window.size());
    const std::size_t min_m = std::min(cfg.slate_size[0], max_m);
    const auto m = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(min_m),
                        static_cast<std::int64_t>(max_m)));
    std::vector<std::size_t> negatives;
    negatives.reserve(window.size() - 1);
    for (std::size_t i = 0; i < window.size(); ++i) {
      if (i != chosen) negatives.push_back(window[i]);
    }
    rng.shuffle(negatives);
    std::vector<std::size_t> picked(negatives.begin(),
                                    negatives.begin() + static_cast<std::ptrdiff_t>(m - 1));
    picked.push_back(window[chosen]);
    rng.shuffle(picked);

    Slate slate;
    slate.user_id = user.user_id;
    slate.t_c = t_c;
    slate.history = history;
    slate.candidates.reserve(m);
    for (std::size_t i = 0; i < picked.size(); ++i) {
      slate.candidates.push_back(candidate_at(matches[picked[i]], t_c));
      if (picked[i] == window[chosen]) slate.label = static_cast<std::int32_t>(i);
    }
    out.slates.push_back(std::move(slate));
    out.clicks.push_back(
        ClickTruth{user.user_id, t_c, window[chosen], logits[chosen] - lse});

    const MatchInfo& clicked = matches[window[chosen]];
    HistoricalAction action;
    action.sport = clicked.sport;
    action.format = clicked.format;
    action.t = t_c;
    action.interaction = kind;
    action.ttrl_at_action = clicked.start - t_c;
    action.lineups_out = t_c >= clicked.lineup_time;
    action.max_prize = clicked.max_prize;
    history.push_back(action);
  }
  return out;
}

SimOutput generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  SimOutput out;
  out.truth.matches = generate_matches(cfg);
  out.truth.users.reserve(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    out.truth.users.push_back(draw_user(cfg, i));
  }
  // user ids are zero-padded, so per-user streams in index order are already
  // canonically ordered by (user_id, t_c)
  for (const auto& user : out.truth.users) {
    UserStream stream = simulate_user_stream(user, out.truth.matches, cfg);
    out.skipped_requests += stream.skipped_requests;
    std::move(stream.slates.begin(), stream.slates.end(), std::back_inserter(out.slates));
    std::move(stream.clicks.begin(), stream.clicks.end(),
              std::back_inserter(out.truth.clicks));
  }
  return out;
}

int split_assignment(const std::string& user_id, const SimConfig& cfg) {
  Rng rng = Rng(cfg.seed).derive("split").derive(user_id);
  const double u = rng.next_double();
  if (u < cfg.train_user_frac) return 0;
  if (u < cfg.train_user_frac + cfg.val_user_frac) return 1;
  return 2;
}

SplitDataset split_dataset(const std::vector<Slate>& slates, const SimConfig& cfg) {
  cfg.validate();
  std::unordered_set<std::string> users;
  for (const auto& s : slates) users.insert(s.user_id);
  if (users.size() < 3) {
    throw ConfigError("split: need at least 3 distinct users, got " +
                      std::to_string(users.size()));
  }
  const auto horizon = static_cast<double>(cfg.horizon_seconds());
  const std::int64_t train_end =
      cfg.start_epoch + static_cast<std::int64_t>(cfg.train_time_frac * horizon);
  const std::int64_t val_end = cfg.start_epoch + static_cast<std::int64_t>(
                                   (cfg.train_time_frac + cfg.val_time_frac) * horizon);
  SplitDataset out;
  for (const auto& s : slates) {
    switch (split_assignment(s.user_id, cfg)) {
      case 0:
        if (s.t_c <= train_end) out.train.push_back(s);
        break;
      case 1:
        if (s.t_c > train_end && s.t_c <= val_end) out.val.push_back(s);
        break;
      default:
        if (s.t_c > val_end) out.test.push_back(s);
        break;
    }
  }
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw ConfigError("split: a split came out empty; widen the fractions or horizon");
  }
  return out;
}

}  // namespace matchrank
