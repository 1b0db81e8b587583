#pragma once

#include <filesystem>
#include <vector>

#include "emokd/distill_train.hpp"
#include "emokd/gate.hpp"

namespace emokd {

// One stage-3 training row: the VLM side (one-hot, or uniform when the
// response did not parse) and the student distribution.
struct GateTrainingExample {
  ProbVector v1;
  ProbVector v2;
  std::size_t target_index = 0;
};

// The gate has two orders of magnitude fewer parameters than the head and
// the same fixed learning rate, so it needs a larger epoch budget to move
// the same parameter distance.
struct GateHyperparams {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 15;
  uint64_t seed = 0;
};

struct GateTrainResult {
  GateParams params;  // best-val-accuracy checkpoint
  TrainingHistory history;
};

// Cross-entropy on gate_forward logits against ground truth; only the
// gate parameters move. Deterministic in hyperparams.seed.
GateTrainResult train_gate(const std::vector<GateTrainingExample>& train,
                           const std::vector<GateTrainingExample>& val,
                           const GateConfig& config,
                           const GateHyperparams& hyperparams);

double gate_accuracy(const GateParams& params,
                     const std::vector<GateTrainingExample>& examples);

struct GateCheckpointInfo {
  GateConfig config;
  LabelSpacePtr space;
  uint64_t seed = 0;
  std::size_t epoch = 0;
  std::map<std::string, double> metrics;
};

void save_gate_checkpoint(const std::filesystem::path& stem,
                          const GateParams& params,
                          const GateCheckpointInfo& info);
std::pair<GateParams, GateCheckpointInfo> load_gate_checkpoint(
    const std::filesystem::path& stem);

}  // namespace emokd
