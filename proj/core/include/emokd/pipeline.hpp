#pragma once

#include <filesystem>
#include <string>

#include "emokd/config.hpp"
#include "emokd/distill_train.hpp"
#include "emokd/gate_train.hpp"
#include "emokd/metrics.hpp"

namespace emokd {

// Run-directory layout: <out>/<run_id>/{summary, tables, plots,
// checkpoints, synth, instructions} plus manifest.json at the top.
struct RunPaths {
  std::filesystem::path run_dir;
  std::filesystem::path checkpoints;
  std::filesystem::path summary;
  std::filesystem::path tables;
  std::filesystem::path plots;
  std::filesystem::path synth;
  std::filesystem::path instructions;

  static RunPaths resolve(const RunConfig& config);
  std::filesystem::path head_stem() const { return checkpoints / "head"; }
  std::filesystem::path gate_stem() const { return checkpoints / "gate"; }
};

// Stage inputs joined by sample id, in sorted-id order, before splitting.
// Synthetic configs regenerate the bundle; real configs read the recorded
// files (and the class-folder index when data.root is set).
struct StageData {
  LabelSpacePtr space;
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<FeatureRecord> features;
  std::vector<TeacherRecord> teacher;
  std::vector<VlmPrediction> vlm;  // may be empty for stage 2
};

StageData load_stage_data(const RunConfig& config, bool need_vlm);

// The stage commands; each throws on failure (the CLI maps exceptions to
// exit codes) and writes its artifacts under the run directory.
void cmd_synth(const RunConfig& config);
void cmd_prepare_instructions(const RunConfig& config);
void cmd_train_distill(const RunConfig& config);
void cmd_train_gate(const RunConfig& config);
EvalReport cmd_evaluate(const RunConfig& config);
void cmd_ablate(const RunConfig& config, const std::string& which);
ComplementarityPartition cmd_complementarity(const RunConfig& config);

}  // namespace emokd
