#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emokd/distill.hpp"
#include "emokd/records.hpp"

namespace emokd {

// Adam with bias correction; decoupled weight decay fixed at 0.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

struct EpochRecord {
  double l_total = 0.0;
  double l_kd = 0.0;
  double l_ce = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // epoch of the returned checkpoint
};

// Delimited table: epoch, L_total, L_KD, L_CE, train_acc, val_acc.
std::string history_table(const TrainingHistory& history);

// Dense stage-2 training set: features (n x d), teacher logits (n x C) and
// target class indexes, joined by sample_id.
struct DistillDataset {
  LabelSpacePtr space;
  std::size_t n = 0;
  std::size_t feature_dim = 0;
  std::vector<double> features;        // row-major n x d
  std::vector<double> teacher_logits;  // row-major n x C
  std::vector<std::size_t> targets;
  std::vector<std::string> sample_ids;

  std::span<const double> feature_row(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  std::span<const double> teacher_row(std::size_t i) const {
    return {teacher_logits.data() + i * space->size(), space->size()};
  }
};

// Joins records over sample ids (every id in `ids` must have a feature
// and a teacher row). Throws SchemaError on gaps or dim mismatches.
DistillDataset build_distill_dataset(
    const std::vector<std::string>& ids,
    const std::vector<std::string>& labels,
    const std::vector<FeatureRecord>& features,
    const std::vector<TeacherRecord>& teacher, const LabelSpacePtr& space);

struct DistillTrainResult {
  DistillHead head;  // best-val-accuracy checkpoint
  TrainingHistory history;
};

// Mini-batch Adam over the head parameters only. Deterministic in
// hyperparams.seed: init, batch order and early stopping all derive from
// it. Throws EmptyDataset / TrainingDiverged.
DistillTrainResult train_distill_head(const DistillDataset& train,
                                      const DistillDataset& val,
                                      const DistillHeadConfig& config,
                                      const DistillHyperparams& hyperparams);

double head_accuracy(const DistillHead& head, const DistillDataset& data);
// Fraction of samples where student argmax equals teacher argmax.
double head_teacher_agreement(const DistillHead& head,
                              const DistillDataset& data);

// Checkpoint: <stem>.json manifest + <stem>.bin payload of row-major
// float32 parameters in layer order. Loading validates the param count
// and the payload digest.
struct HeadCheckpointInfo {
  DistillHeadConfig config;
  LabelSpacePtr space;
  uint64_t seed = 0;
  std::size_t epoch = 0;
  std::map<std::string, double> metrics;
};

void save_head_checkpoint(const std::filesystem::path& stem,
                          const DistillHead& head,
                          const HeadCheckpointInfo& info);
std::pair<DistillHead, HeadCheckpointInfo> load_head_checkpoint(
    const std::filesystem::path& stem);

// Shared float32 payload helpers (also used by gate checkpoints).
void save_payload_f32(const std::filesystem::path& path,
                      std::span<const double> values);
std::vector<double> load_payload_f32(const std::filesystem::path& path);

}  // namespace emokd
