#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "matchrank/data.hpp"
#include "matchrank/model.hpp"
#include "matchrank/simulator.hpp"
#include "matchrank/trainer.hpp"

namespace matchrank {

// Everything one experiment needs, parsed strictly: unknown keys are
// rejected and referenced paths are validated before any work starts.
// Sub-seeds default to the top-level seed; vocabularies flow from the sim
// section into the encoder unless overridden.
struct RunConfig {
  std::uint64_t seed = 1;
  SimConfig sim;
  EncodingConfig encoding;
  ModelConfig model;
  TrainConfig train;
  struct Paths {
    std::string data_dir = "data";
    std::string checkpoint = "checkpoint.json";
  } paths;

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_json_text(const std::string& text);
  std::string to_json_text() const;  // canonical form, stable bytes
  std::uint64_t config_hash() const;
};

// --- JSONL slate records -------------------------------------------------
// One JSON object per line; sports/formats travel as names and are mapped
// through the vocabularies on read.

std::string slate_to_json_line(const Slate& s, const std::vector<std::string>& sports,
                               const std::vector<std::string>& formats);

Slate slate_from_json_line(const std::string& line,
                           const std::vector<std::string>& sports,
                           const std::vector<std::string>& formats);

void write_slates_jsonl(const std::filesystem::path& path,
                        const std::vector<Slate>& slates,
                        const std::vector<std::string>& sports,
                        const std::vector<std::string>& formats);

// Throws DataError naming the 1-based line of the first bad record.
std::vector<Slate> read_slates_jsonl(const std::filesystem::path& path,
                                     const std::vector<std::string>& sports,
                                     const std::vector<std::string>& formats);

// Streaming validation; returns slate count, throws DataError with the
// offending line number on the first invariant violation.
std::size_t validate_slates_jsonl(const std::filesystem::path& path,
                                  const std::vector<std::string>& sports,
                                  const std::vector<std::string>& formats);

// --- ground truth sidecar ------------------------------------------------

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path);

// --- generation manifest ---------------------------------------------------

struct Manifest {
  std::size_t train_slates = 0;
  std::size_t val_slates = 0;
  std::size_t test_slates = 0;
  std::size_t skipped_requests = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

// --- checkpoints -----------------------------------------------------------
// JSON mapping parameter name -> shape -> row-major values, with the
// encoding/model configs in the header. Round-trips bit-exactly.

struct Checkpoint {
  DinParams params;
  EncodingConfig encoding;
  ModelConfig model;
};

void save_checkpoint(const std::filesystem::path& path, const DinParams& params,
                     const EncodingConfig& enc, const ModelConfig& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// --- training log ----------------------------------------------------------

std::string training_log_text(const std::vector<EpochLog>& log);

}  // namespace matchrank
