#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emokd/dataset.hpp"
#include "emokd/distill.hpp"
#include "emokd/gate.hpp"
#include "emokd/gate_train.hpp"
#include "emokd/instructions.hpp"
#include "emokd/synthetic.hpp"

namespace emokd {

struct DataPaths {
  std::string root;      // class-folder dataset root
  std::string features;  // recorded feature file
  std::string teacher;   // recorded teacher-logit file
  std::string vlm;       // recorded VLM-prediction file
  std::string labels;    // recorded label file (alternative to root)
};

struct ClientConfig {
  std::string text_endpoint;
  std::string encoder_endpoint;
  std::string replay_file;
  std::string token_env = "EMOKD_API_TOKEN";  // env var name, never the token
  std::string decoding_json;  // passthrough decoding parameters, verbatim
};

struct InstructionConfig {
  std::vector<TripletKind> kinds = {TripletKind::conversation,
                                    TripletKind::reasoning};
  std::size_t per_kind = 1;
};

struct AblateConfig {
  std::vector<double> alpha_grid;                  // empty = default 0.1..0.9
  std::vector<std::vector<std::size_t>> depth_grid;  // empty = bracket default
  std::size_t seeds = 1;  // >1 averages metrics over consecutive seeds
};

// The validated, defaults-filled run configuration. canonical_json holds
// the resolved config (sorted keys); run_id is its content hash, so
// identical configs map to identical run directories.
struct RunConfig {
  std::string profile;  // empty in synthetic mode
  std::optional<SyntheticSpec> synthetic;
  DataPaths data;
  std::string out_dir = "runs";
  uint64_t seed = 0;
  SplitSpec split;
  DistillHeadConfig head;
  DistillHyperparams distill;
  GateConfig gate;
  GateHyperparams gate_hyper;
  InstructionConfig instructions;
  ClientConfig clients;
  AblateConfig ablate;

  std::string canonical_json;
  std::string run_id;

  bool is_synthetic() const { return synthetic.has_value(); }
  LabelSpacePtr space() const;
};

struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
};

// Parses, applies CLI overrides (CLI > file > defaults), fills defaults,
// cross-checks fields and verifies referenced paths exist. Unknown keys
// are a ConfigError listing every offender.
RunConfig validate_config(const std::string& raw_text,
                          const ConfigOverrides& overrides = {});
RunConfig load_config_file(const std::filesystem::path& path,
                           const ConfigOverrides& overrides = {});

// --- run manifest --------------------------------------------------------

enum class StageStatus { pending, done, not_applicable };

std::string to_string(StageStatus status);
StageStatus stage_status_from_string(const std::string& s);

// Stage bookkeeping for one run directory. A stage may only complete when
// every earlier applicable stage (instructions -> distill -> gate) is done.
struct RunManifest {
  std::string run_id;
  std::string config_echo;
  std::map<std::string, StageStatus> stages;
  std::map<std::string, std::string> digests;
  std::map<std::string, double> metrics;

  static RunManifest create(const RunConfig& config);
  static RunManifest load_or_create(const RunConfig& config,
                                    const std::filesystem::path& run_dir);
  void save(const std::filesystem::path& run_dir) const;  // atomic

  StageStatus status(const std::string& stage) const;
  bool stage_done(const std::string& stage) const;
  // Throws MissingArtifact when an earlier applicable stage is pending.
  void require_ready(const std::string& stage) const;
  void mark_done(const std::string& stage);
};

inline constexpr const char* kStageInstructions = "instructions";
inline constexpr const char* kStageDistill = "distill";
inline constexpr const char* kStageGate = "gate";

}  // namespace emokd
