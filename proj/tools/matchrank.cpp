// matchrank: generate synthetic slate data, train and evaluate the ranker,
// and run the ablation harness, from one JSON run config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "matchrank/io.hpp"
#include "matchrank/metrics.hpp"
#include "matchrank/simulator.hpp"
#include "matchrank/trainer.hpp"

namespace fs = std::filesystem;
using namespace matchrank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", args.config_path, "run config JSON file");
  }
  cmd->add_option("--seed", args.seed, "override the run seed");
  cmd->add_option("--threads", args.threads, "gradient shard / worker count");
  cmd->add_option("--out", args.out_dir, "output directory");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = RunConfig::from_file(args.config_path);
  }
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.sim.seed = *args.seed;
    cfg.train.seed = *args.seed;
  }
  if (args.threads) cfg.train.shards = *args.threads;
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

int cmd_generate(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  const fs::path out_dir = args.out_dir.empty() ? fs::path(cfg.paths.data_dir)
                                                : fs::path(args.out_dir);
  fs::create_directories(out_dir);

  SimOutput out = generate_dataset(cfg.sim);
  SplitDataset split = split_dataset(out.slates, cfg.sim);

  write_slates_jsonl(out_dir / "train.jsonl", split.train, cfg.sim.sports,
                     cfg.sim.formats);
  write_slates_jsonl(out_dir / "val.jsonl", split.val, cfg.sim.sports, cfg.sim.formats);
  write_slates_jsonl(out_dir / "test.jsonl", split.test, cfg.sim.sports,
                     cfg.sim.formats);
  write_ground_truth(out_dir / "ground_truth.json", out.truth);

  Manifest manifest;
  manifest.train_slates = split.train.size();
  manifest.val_slates = split.val.size();
  manifest.test_slates = split.test.size();
  manifest.skipped_requests = out.skipped_requests;
  manifest.seed = cfg.seed;
  manifest.config_hash = cfg.config_hash();
  write_manifest(out_dir / "manifest.json", manifest);

  std::cout << "wrote " << out_dir.string() << ": train=" << split.train.size()
            << " val=" << split.val.size() << " test=" << split.test.size()
            << " skipped_requests=" << out.skipped_requests << '\n';
  return kExitOk;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  const fs::path data_dir(cfg.paths.data_dir);
  const fs::path train_path = data_dir / "train.jsonl";
  const fs::path val_path = data_dir / "val.jsonl";
  for (const auto& p : {train_path, val_path}) {
    if (!fs::exists(p)) throw IoError("missing dataset file " + p.string());
  }
  const fs::path out_dir = args.out_dir.empty() ? fs::path(".") : fs::path(args.out_dir);
  fs::create_directories(out_dir);
  const fs::path ckpt_path = args.out_dir.empty()
                                 ? fs::path(cfg.paths.checkpoint)
                                 : out_dir / "checkpoint.json";

  const auto train_set = read_slates_jsonl(train_path, cfg.sim.sports, cfg.sim.formats);
  const auto val_set = read_slates_jsonl(val_path, cfg.sim.sports, cfg.sim.formats);

  TrainResult result = train(train_set, val_set, cfg.encoding, cfg.model, cfg.train);
  save_checkpoint(ckpt_path, result.best, result.encoding, result.model);
  write_file(out_dir / "training_log.txt", training_log_text(result.log));

  std::cout << "trained " << result.log.size() << " epochs; best val ndcg@1 "
            << result.best_val_ndcg1 << " at epoch " << result.best_epoch << '\n'
            << "checkpoint: " << ckpt_path.string() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const CommonArgs& args) {
  if (!fs::exists(ckpt_path)) throw IoError("missing checkpoint " + ckpt_path);
  if (!fs::exists(data_path)) throw IoError("missing dataset " + data_path);
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const auto slates =
      read_slates_jsonl(data_path, ckpt.encoding.sports, ckpt.encoding.formats);
  EvalConfig eval_cfg;
  if (args.threads) eval_cfg.threads = *args.threads;
  MetricReport report = evaluate(ckpt.params, ckpt.encoding, slates, eval_cfg);
  std::cout << report.to_text();
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "metrics.txt", report.to_text());
  }
  return kExitOk;
}

int cmd_ablate(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  const fs::path data_dir(cfg.paths.data_dir);
  SplitDataset split;
  if (fs::exists(data_dir / "manifest.json")) {
    split.train = read_slates_jsonl(data_dir / "train.jsonl", cfg.sim.sports,
                                    cfg.sim.formats);
    split.val = read_slates_jsonl(data_dir / "val.jsonl", cfg.sim.sports,
                                  cfg.sim.formats);
    split.test = read_slates_jsonl(data_dir / "test.jsonl", cfg.sim.sports,
                                   cfg.sim.formats);
    std::cout << "using dataset from " << data_dir.string() << '\n';
  } else {
    std::cout << "no dataset at " << data_dir.string() << ", simulating in memory\n";
    SimOutput out = generate_dataset(cfg.sim);
    split = split_dataset(out.slates, cfg.sim);
  }

  const auto rows = run_ablation(split, cfg.encoding, cfg.model, cfg.train);
  std::cout << format_ablation_table(rows);

  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["variant"] = row.name;
    for (std::size_t k : {1, 3, 5}) {
      r["ndcg@" + std::to_string(k)] = row.metrics.ndcg_at(k);
      r["recall@" + std::to_string(k)] = row.metrics.recall_at(k);
    }
    j.push_back(std::move(r));
  }
  const fs::path out_dir = args.out_dir.empty() ? fs::path(".") : fs::path(args.out_dir);
  fs::create_directories(out_dir);
  write_file(out_dir / "ablation.json", j.dump(2) + "\n");
  return kExitOk;
}

int cmd_validate(const std::string& data_path, const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  if (!fs::exists(data_path)) throw IoError("missing dataset " + data_path);
  const std::size_t n =
      validate_slates_jsonl(data_path, cfg.sim.sports, cfg.sim.formats);
  std::cout << "records " << n << "\nstatus ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"listwise learning-to-rank engine for deadline-bound match slates"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, ablate_args, validate_args;
  std::string eval_ckpt, eval_data, validate_data;

  CLI::App* generate = app.add_subcommand(
      "generate", "simulate users and write train/val/test JSONL plus ground truth");
  add_common(generate, gen_args);

  CLI::App* train_cmd =
      app.add_subcommand("train", "train on a generated dataset, write a checkpoint");
  add_common(train_cmd, train_args);

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a dataset with a checkpoint, report metrics");
  eval_cmd->add_option("checkpoint", eval_ckpt, "checkpoint JSON file")->required();
  eval_cmd->add_option("data", eval_data, "slates JSONL file")->required();
  add_common(eval_cmd, eval_args, /*with_config=*/false);

  CLI::App* ablate = app.add_subcommand(
      "ablate", "train the four model variants and tabulate test metrics");
  add_common(ablate, ablate_args);

  CLI::App* validate =
      app.add_subcommand("validate", "check every record against the slate invariants");
  validate->add_option("data", validate_data, "slates JSONL file")->required();
  add_common(validate, validate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_args);
    if (ablate->parsed()) return cmd_ablate(ablate_args);
    if (validate->parsed()) return cmd_validate(validate_data, validate_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
