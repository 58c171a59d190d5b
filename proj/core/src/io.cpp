#include "matchrank/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "matchrank/rng.hpp"

namespace matchrank {

namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) it->get_to(out);
}

std::array<double, 2> range_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError("config: " + where + " must be a [lo, hi] pair");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

json vocab_to_json(const std::vector<std::string>& names,
                   const std::vector<double>& weights) {
  json arr = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    arr.push_back(json{{"name", names[i]}, {"weight", weights[i]}});
  }
  return arr;
}

void vocab_from_json(const json& arr, std::vector<std::string>& names,
                     std::vector<double>& weights, const std::string& where) {
  if (!arr.is_array() || arr.empty()) {
    throw ConfigError("config: " + where + " must be a non-empty array");
  }
  names.clear();
  weights.clear();
  for (const auto& entry : arr) {
    check_keys(entry, {"name", "weight"}, where);
    names.push_back(entry.at("name").get<std::string>());
    weights.push_back(entry.at("weight").get<double>());
  }
}

json sim_to_json(const SimConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["n_users"] = c.n_users;
  j["n_matches"] = c.n_matches;
  j["sports"] = vocab_to_json(c.sports, c.sport_weights);
  j["formats"] = vocab_to_json(c.formats, c.format_weights);
  j["horizon_days"] = c.horizon_days;
  j["start_epoch"] = c.start_epoch;
  j["power_fraction"] = c.power_fraction;
  auto arch = [](const ArchetypeRange& a) {
    return json{{"beta_u", {a.beta_u[0], a.beta_u[1]}},
                {"half_life_days", {a.half_life_days[0], a.half_life_days[1]}},
                {"affinity_scale", a.affinity_scale}};
  };
  j["power"] = arch(c.power);
  j["casual"] = arch(c.casual);
  j["slate_size"] = {c.slate_size[0], c.slate_size[1]};
  j["interactions_per_user"] = {c.interactions_per_user[0], c.interactions_per_user[1]};
  j["prize_log_mu"] = c.prize_log_mu;
  j["prize_log_sigma"] = c.prize_log_sigma;
  j["entry_fee_log_mu"] = c.entry_fee_log_mu;
  j["entry_fee_log_sigma"] = c.entry_fee_log_sigma;
  j["lineup_lead_minutes"] = {c.lineup_lead_minutes_min, c.lineup_lead_minutes_max};
  j["train_user_frac"] = c.train_user_frac;
  j["val_user_frac"] = c.val_user_frac;
  j["train_time_frac"] = c.train_time_frac;
  j["val_time_frac"] = c.val_time_frac;
  return j;
}

void sim_from_json(const json& j, SimConfig& c) {
  check_keys(j,
             {"seed", "n_users", "n_matches", "sports", "formats", "horizon_days",
              "start_epoch", "power_fraction", "power", "casual", "slate_size",
              "interactions_per_user", "prize_log_mu", "prize_log_sigma",
              "entry_fee_log_mu", "entry_fee_log_sigma", "lineup_lead_minutes",
              "train_user_frac", "val_user_frac", "train_time_frac", "val_time_frac"},
             "sim");
  get_to(j, "seed", c.seed);
  get_to(j, "n_users", c.n_users);
  get_to(j, "n_matches", c.n_matches);
  if (j.contains("sports")) vocab_from_json(j["sports"], c.sports, c.sport_weights, "sim.sports");
  if (j.contains("formats")) {
    vocab_from_json(j["formats"], c.formats, c.format_weights, "sim.formats");
  }
  get_to(j, "horizon_days", c.horizon_days);
  get_to(j, "start_epoch", c.start_epoch);
  get_to(j, "power_fraction", c.power_fraction);
  auto arch = [](const json& v, ArchetypeRange& a, const std::string& where) {
    check_keys(v, {"beta_u", "half_life_days", "affinity_scale"}, where);
    if (v.contains("beta_u")) a.beta_u = range_of(v["beta_u"], where + ".beta_u");
    if (v.contains("half_life_days")) {
      a.half_life_days = range_of(v["half_life_days"], where + ".half_life_days");
    }
    if (v.contains("affinity_scale")) v["affinity_scale"].get_to(a.affinity_scale);
  };
  if (j.contains("power")) arch(j["power"], c.power, "sim.power");
  if (j.contains("casual")) arch(j["casual"], c.casual, "sim.casual");
  if (j.contains("slate_size")) {
    auto r = range_of(j["slate_size"], "sim.slate_size");
    c.slate_size = {static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1])};
  }
  if (j.contains("interactions_per_user")) {
    auto r = range_of(j["interactions_per_user"], "sim.interactions_per_user");
    c.interactions_per_user = {static_cast<std::size_t>(r[0]),
                               static_cast<std::size_t>(r[1])};
  }
  get_to(j, "prize_log_mu", c.prize_log_mu);
  get_to(j, "prize_log_sigma", c.prize_log_sigma);
  get_to(j, "entry_fee_log_mu", c.entry_fee_log_mu);
  get_to(j, "entry_fee_log_sigma", c.entry_fee_log_sigma);
  if (j.contains("lineup_lead_minutes")) {
    auto r = range_of(j["lineup_lead_minutes"], "sim.lineup_lead_minutes");
    c.lineup_lead_minutes_min = r[0];
    c.lineup_lead_minutes_max = r[1];
  }
  get_to(j, "train_user_frac", c.train_user_frac);
  get_to(j, "val_user_frac", c.val_user_frac);
  get_to(j, "train_time_frac", c.train_time_frac);
  get_to(j, "val_time_frac", c.val_time_frac);
}

json encoding_to_json(const EncodingConfig& c, bool with_vocab) {
  json j;
  if (with_vocab) {
    j["sports"] = c.sports;
    j["formats"] = c.formats;
  }
  j["h_max"] = c.h_max;
  j["delta_t_buckets"] = c.delta_t_buckets;
  j["d_sport"] = c.d_sport;
  j["d_format"] = c.d_format;
  j["d_interaction"] = c.d_interaction;
  j["d_bucket"] = c.d_bucket;
  j["scale_seconds"] = c.scale_seconds;
  j["scale_currency"] = c.scale_currency;
  j["scale_count"] = c.scale_count;
  j["use_urgency_features"] = c.use_urgency_features;
  j["use_positional_encoding"] = c.use_positional_encoding;
  return j;
}

void encoding_from_json(const json& j, EncodingConfig& c, bool with_vocab,
                        const std::string& where) {
  if (with_vocab) {
    check_keys(j,
               {"sports", "formats", "h_max", "delta_t_buckets", "d_sport", "d_format",
                "d_interaction", "d_bucket", "scale_seconds", "scale_currency",
                "scale_count", "use_urgency_features", "use_positional_encoding"},
               where);
    get_to(j, "sports", c.sports);
    get_to(j, "formats", c.formats);
  } else {
    check_keys(j,
               {"h_max", "delta_t_buckets", "d_sport", "d_format", "d_interaction",
                "d_bucket", "scale_seconds", "scale_currency", "scale_count",
                "use_urgency_features", "use_positional_encoding"},
               where);
  }
  get_to(j, "h_max", c.h_max);
  get_to(j, "delta_t_buckets", c.delta_t_buckets);
  get_to(j, "d_sport", c.d_sport);
  get_to(j, "d_format", c.d_format);
  get_to(j, "d_interaction", c.d_interaction);
  get_to(j, "d_bucket", c.d_bucket);
  get_to(j, "scale_seconds", c.scale_seconds);
  get_to(j, "scale_currency", c.scale_currency);
  get_to(j, "scale_count", c.scale_count);
  get_to(j, "use_urgency_features", c.use_urgency_features);
  get_to(j, "use_positional_encoding", c.use_positional_encoding);
}

json model_to_json(const ModelConfig& c) {
  return json{{"attention_hidden", c.attention_hidden}, {"mlp_hidden", c.mlp_hidden}};
}

void model_from_json(const json& j, ModelConfig& c, const std::string& where) {
  check_keys(j, {"attention_hidden", "mlp_hidden"}, where);
  get_to(j, "attention_hidden", c.attention_hidden);
  get_to(j, "mlp_hidden", c.mlp_hidden);
}

json train_to_json(const TrainConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["loss"] = c.loss == TrainConfig::Loss::listwise ? "listwise" : "pointwise";
  j["tau"] = c.tau;
  j["sinkhorn_iters"] = c.sinkhorn_iters;
  j["clip_norm"] = c.clip_norm;
  j["seed"] = c.seed;
  j["shards"] = c.shards;
  return j;
}

void train_from_json(const json& j, TrainConfig& c) {
  check_keys(j,
             {"learning_rate", "batch_size", "beta1", "beta2", "epsilon", "max_epochs",
              "patience", "loss", "tau", "sinkhorn_iters", "clip_norm", "seed", "shards"},
             "train");
  get_to(j, "learning_rate", c.learning_rate);
  get_to(j, "batch_size", c.batch_size);
  get_to(j, "beta1", c.beta1);
  get_to(j, "beta2", c.beta2);
  get_to(j, "epsilon", c.epsilon);
  get_to(j, "max_epochs", c.max_epochs);
  get_to(j, "patience", c.patience);
  if (auto it = j.find("loss"); it != j.end()) {
    const auto name = it->get<std::string>();
    if (name == "listwise") {
      c.loss = TrainConfig::Loss::listwise;
    } else if (name == "pointwise") {
      c.loss = TrainConfig::Loss::pointwise;
    } else {
      throw ConfigError("config: train.loss must be 'listwise' or 'pointwise', got '" +
                        name + "'");
    }
  }
  get_to(j, "tau", c.tau);
  get_to(j, "sinkhorn_iters", c.sinkhorn_iters);
  get_to(j, "clip_norm", c.clip_norm);
  get_to(j, "seed", c.seed);
  get_to(j, "shards", c.shards);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from_json_text(read_text_file(path));
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, {"seed", "sim", "encoding", "model", "train", "paths"}, "top level");
  RunConfig c;
  get_to(j, "seed", c.seed);
  // sub-seeds default to the run seed
  c.sim.seed = c.seed;
  c.train.seed = c.seed;
  if (j.contains("sim")) sim_from_json(j["sim"], c.sim);
  // the simulator vocabularies are the encoder vocabularies
  c.encoding.sports = c.sim.sports;
  c.encoding.formats = c.sim.formats;
  if (j.contains("encoding")) {
    encoding_from_json(j["encoding"], c.encoding, /*with_vocab=*/false, "encoding");
  }
  if (j.contains("model")) model_from_json(j["model"], c.model, "model");
  if (j.contains("train")) train_from_json(j["train"], c.train);
  if (j.contains("paths")) {
    check_keys(j["paths"], {"data_dir", "checkpoint"}, "paths");
    get_to(j["paths"], "data_dir", c.paths.data_dir);
    get_to(j["paths"], "checkpoint", c.paths.checkpoint);
  }
  c.sim.validate();
  c.encoding.validate();
  c.model.validate();
  c.train.validate();
  return c;
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["sim"] = sim_to_json(sim);
  j["encoding"] = encoding_to_json(encoding, /*with_vocab=*/false);
  j["model"] = model_to_json(model);
  j["train"] = train_to_json(train);
  j["paths"] = json{{"data_dir", paths.data_dir}, {"checkpoint", paths.checkpoint}};
  return j.dump(2) + "\n";
}

std::uint64_t RunConfig::config_hash() const { return Rng::hash(to_json_text()); }

// --- JSONL slate records ---------------------------------------------------

namespace {

std::size_t vocab_index(const std::vector<std::string>& vocab, const std::string& name,
                        const char* what) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == name) return i;
  }
  throw DataError(std::string("unknown ") + what + " '" + name + "'");
}

json slate_to_json(const Slate& s, const std::vector<std::string>& sports,
                   const std::vector<std::string>& formats) {
  json j;
  j["user_id"] = s.user_id;
  j["t_c"] = s.t_c;
  json history = json::array();
  for (const auto& a : s.history) {
    json h;
    h["sport"] = sports.at(static_cast<std::size_t>(a.sport));
    h["format"] = formats.at(static_cast<std::size_t>(a.format));
    h["t"] = a.t;
    h["kind"] = interaction_name(a.interaction);
    if (const auto* join = std::get_if<ContestJoin>(&a.interaction)) {
      h["num_contests"] = join->num_contests;
      h["entry_fee"] = join->total_entry_fee;
    }
    h["ttrl_at_action"] = a.ttrl_at_action;
    h["lineups_out"] = a.lineups_out;
    h["max_prize"] = a.max_prize;
    history.push_back(std::move(h));
  }
  j["history"] = std::move(history);
  json candidates = json::array();
  for (const auto& c : s.candidates) {
    json jc;
    jc["sport"] = sports.at(static_cast<std::size_t>(c.sport));
    jc["format"] = formats.at(static_cast<std::size_t>(c.format));
    jc["ttrl"] = c.ttrl;
    if (c.time_since_lineups) {
      jc["time_since_lineups"] = *c.time_since_lineups;
    } else {
      jc["time_since_lineups"] = nullptr;
    }
    jc["max_prize"] = c.max_prize;
    candidates.push_back(std::move(jc));
  }
  j["candidates"] = std::move(candidates);
  j["label"] = s.label;
  return j;
}

Slate slate_from_json(const json& j, const std::vector<std::string>& sports,
                      const std::vector<std::string>& formats) {
  check_keys(j, {"user_id", "t_c", "history", "candidates", "label"}, "slate record");
  Slate s;
  s.user_id = j.at("user_id").get<std::string>();
  s.t_c = j.at("t_c").get<std::int64_t>();
  for (const auto& h : j.at("history")) {
    check_keys(h,
               {"sport", "format", "t", "kind", "num_contests", "entry_fee",
                "ttrl_at_action", "lineups_out", "max_prize"},
               "history entry");
    HistoricalAction a;
    a.sport = static_cast<std::int32_t>(
        vocab_index(sports, h.at("sport").get<std::string>(), "sport"));
    a.format = static_cast<std::int32_t>(
        vocab_index(formats, h.at("format").get<std::string>(), "format"));
    a.t = h.at("t").get<std::int64_t>();
    const auto kind = h.at("kind").get<std::string>();
    if (kind == "click") {
      a.interaction = MatchClick{};
    } else if (kind == "team_save") {
      a.interaction = TeamSave{};
    } else if (kind == "contest_join") {
      ContestJoin join;
      join.num_contests = h.at("num_contests").get<std::int64_t>();
      join.total_entry_fee = h.at("entry_fee").get<double>();
      a.interaction = join;
    } else {
      throw DataError("unknown interaction kind '" + kind + "'");
    }
    if (kind != "contest_join" && (h.contains("num_contests") || h.contains("entry_fee"))) {
      throw DataError("interaction kind '" + kind + "' cannot carry join enrichment");
    }
    a.ttrl_at_action = h.at("ttrl_at_action").get<std::int64_t>();
    a.lineups_out = h.at("lineups_out").get<bool>();
    a.max_prize = h.at("max_prize").get<double>();
    s.history.push_back(std::move(a));
  }
  for (const auto& jc : j.at("candidates")) {
    check_keys(jc, {"sport", "format", "ttrl", "time_since_lineups", "max_prize"},
               "candidate entry");
    CandidateFeatures c;
    c.sport = static_cast<std::int32_t>(
        vocab_index(sports, jc.at("sport").get<std::string>(), "sport"));
    c.format = static_cast<std::int32_t>(
        vocab_index(formats, jc.at("format").get<std::string>(), "format"));
    c.ttrl = jc.at("ttrl").get<std::int64_t>();
    if (!jc.at("time_since_lineups").is_null()) {
      c.time_since_lineups = jc.at("time_since_lineups").get<std::int64_t>();
    }
    c.max_prize = jc.at("max_prize").get<double>();
    s.candidates.push_back(std::move(c));
  }
  s.label = j.at("label").get<std::int32_t>();
  validate_slate(s);
  return s;
}

}  // namespace

std::string slate_to_json_line(const Slate& s, const std::vector<std::string>& sports,
                               const std::vector<std::string>& formats) {
  return slate_to_json(s, sports, formats).dump();
}

Slate slate_from_json_line(const std::string& line,
                           const std::vector<std::string>& sports,
                           const std::vector<std::string>& formats) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return slate_from_json(j, sports, formats);
  } catch (const ConfigError& e) {  // unknown record keys
    throw DataError(e.what());
  } catch (const json::exception& e) {  // missing or mistyped fields
    throw DataError(std::string("bad record: ") + e.what());
  }
}

void write_slates_jsonl(const std::filesystem::path& path,
                        const std::vector<Slate>& slates,
                        const std::vector<std::string>& sports,
                        const std::vector<std::string>& formats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : slates) {
    out << slate_to_json_line(s, sports, formats) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

template <typename Fn>
std::size_t for_each_jsonl_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      fn(line);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return line_no;
}

}  // namespace

std::vector<Slate> read_slates_jsonl(const std::filesystem::path& path,
                                     const std::vector<std::string>& sports,
                                     const std::vector<std::string>& formats) {
  std::vector<Slate> slates;
  for_each_jsonl_line(path, [&](const std::string& line) {
    slates.push_back(slate_from_json_line(line, sports, formats));
  });
  return slates;
}

std::size_t validate_slates_jsonl(const std::filesystem::path& path,
                                  const std::vector<std::string>& sports,
                                  const std::vector<std::string>& formats) {
  return for_each_jsonl_line(path, [&](const std::string& line) {
    slate_from_json_line(line, sports, formats);
  });
}

// --- ground truth sidecar ----------------------------------------------------

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  json j;
  json matches = json::array();
  for (const auto& m : truth.matches) {
    matches.push_back(json{{"sport", m.sport},
                           {"format", m.format},
                           {"start", m.start},
                           {"lineup_time", m.lineup_time},
                           {"max_prize", m.max_prize}});
  }
  j["matches"] = std::move(matches);
  json users = json::array();
  for (const auto& u : truth.users) {
    users.push_back(json{{"user_id", u.user_id},
                         {"power", u.power},
                         {"beta_u", u.beta_u},
                         {"half_life_seconds", u.half_life_seconds},
                         {"affinity", u.affinity}});
  }
  j["users"] = std::move(users);
  json clicks = json::array();
  for (const auto& c : truth.clicks) {
    clicks.push_back(json{{"user_id", c.user_id},
                          {"t_c", c.t_c},
                          {"match_index", c.match_index},
                          {"log_prob", c.log_prob}});
  }
  j["clicks"] = std::move(clicks);
  write_text_file(path, j.dump() + "\n");
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  GroundTruth truth;
  for (const auto& m : j.at("matches")) {
    truth.matches.push_back(MatchInfo{m.at("sport").get<std::int32_t>(),
                                      m.at("format").get<std::int32_t>(),
                                      m.at("start").get<std::int64_t>(),
                                      m.at("lineup_time").get<std::int64_t>(),
                                      m.at("max_prize").get<double>()});
  }
  for (const auto& u : j.at("users")) {
    UserTruth ut;
    ut.user_id = u.at("user_id").get<std::string>();
    ut.power = u.at("power").get<bool>();
    ut.beta_u = u.at("beta_u").get<double>();
    ut.half_life_seconds = u.at("half_life_seconds").get<double>();
    ut.affinity = u.at("affinity").get<std::vector<double>>();
    truth.users.push_back(std::move(ut));
  }
  for (const auto& c : j.at("clicks")) {
    truth.clicks.push_back(ClickTruth{c.at("user_id").get<std::string>(),
                                      c.at("t_c").get<std::int64_t>(),
                                      c.at("match_index").get<std::size_t>(),
                                      c.at("log_prob").get<double>()});
  }
  return truth;
}

// --- generation manifest -------------------------------------------------------

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  json j;
  j["train_slates"] = m.train_slates;
  j["val_slates"] = m.val_slates;
  j["test_slates"] = m.test_slates;
  j["skipped_requests"] = m.skipped_requests;
  j["seed"] = m.seed;
  j["config_hash"] = m.config_hash;
  write_text_file(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  Manifest m;
  m.train_slates = j.at("train_slates").get<std::size_t>();
  m.val_slates = j.at("val_slates").get<std::size_t>();
  m.test_slates = j.at("test_slates").get<std::size_t>();
  m.skipped_requests = j.at("skipped_requests").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_hash = j.at("config_hash").get<std::uint64_t>();
  return m;
}

// --- checkpoints -----------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const DinParams& params,
                     const EncodingConfig& enc, const ModelConfig& model) {
  json j;
  j["format"] = "matchrank-checkpoint";
  j["version"] = 1;
  j["encoding"] = encoding_to_json(enc, /*with_vocab=*/true);
  j["model"] = model_to_json(model);
  json plist = json::array();
  for (const auto& [name, t] : params.named()) {
    plist.push_back(
        json{{"name", name}, {"shape", t->shape()}, {"data", t->data()}});
  }
  j["params"] = std::move(plist);
  write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("checkpoint " + path.string() + ": invalid JSON: " + e.what());
  }
  if (j.value("format", "") != "matchrank-checkpoint") {
    throw IoError("checkpoint " + path.string() + ": unrecognized format");
  }
  Checkpoint ckpt;
  encoding_from_json(j.at("encoding"), ckpt.encoding, /*with_vocab=*/true,
                     "checkpoint encoding");
  model_from_json(j.at("model"), ckpt.model, "checkpoint model");
  ckpt.encoding.validate();
  ckpt.model.validate();

  ckpt.params = DinParams::init(ckpt.encoding, ckpt.model, 0);
  auto named = ckpt.params.named();
  const auto& plist = j.at("params");
  if (plist.size() != named.size()) {
    throw IoError("checkpoint: expected " + std::to_string(named.size()) +
                  " parameters, found " + std::to_string(plist.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& entry = plist[i];
    if (entry.at("name").get<std::string>() != named[i].first) {
      throw IoError("checkpoint: parameter " + std::to_string(i) + " is '" +
                    entry.at("name").get<std::string>() + "', expected '" +
                    named[i].first + "'");
    }
    Shape shape = entry.at("shape").get<Shape>();
    auto data = entry.at("data").get<std::vector<double>>();
    *named[i].second = Tensor(std::move(shape), std::move(data), true);
  }
  ckpt.params.check_shapes(ckpt.encoding, ckpt.model);
  return ckpt;
}

// --- training log -----------------------------------------------------------------

std::string training_log_text(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& e : log) {
    os << "epoch=" << e.epoch << " train_loss=" << e.train_loss
       << " val_ndcg1=" << e.val_ndcg1 << " wall_time=" << e.wall_seconds << '\n';
  }
  return os.str();
}

}  // namespace matchrank
