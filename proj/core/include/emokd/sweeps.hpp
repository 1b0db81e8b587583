#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emokd/distill_train.hpp"
#include "emokd/gate_train.hpp"

namespace emokd {

struct SweepPoint {
  std::string label;       // grid-point name, e.g. "0.5" or "[1024, 512]"
  double x = 0.0;          // numeric position on the grid
  double accuracy = 0.0;   // best-val accuracy (test accuracy for gates)
  std::optional<double> final_l_kd;       // alpha sweep only
  std::optional<std::size_t> param_count; // depth and gate sweeps
};

struct SweepResult {
  std::string name;           // alpha_sweep | depth_sweep | gate_sweep
  std::string swept;          // swept parameter
  std::vector<SweepPoint> points;  // sorted ascending in x
};

// Figure-3 grid: 0.1 .. 0.9 in 0.1 steps.
std::vector<double> default_alpha_grid();
// The five bracket configurations, [1024] .. [1024, 512, 256, 128, 64].
std::vector<std::vector<std::size_t>> default_depth_grid();

// One train_distill_head per grid point, identical seed everywhere;
// records best-val accuracy and final-epoch L_KD.
SweepResult run_alpha_sweep(const std::vector<double>& grid,
                            const DistillDataset& train,
                            const DistillDataset& val,
                            const DistillHeadConfig& config,
                            const DistillHyperparams& base, uint64_t seed);

SweepResult run_depth_sweep(const std::vector<std::vector<std::size_t>>& grids,
                            const DistillDataset& train,
                            const DistillDataset& val, std::size_t input_dim,
                            const DistillHyperparams& base, uint64_t seed);

// One train_gate per variant on the same examples and seed; accuracy is
// measured on the held-out test examples.
SweepResult run_gate_sweep(const std::vector<GateVariant>& variants,
                           const std::vector<GateTrainingExample>& train,
                           const std::vector<GateTrainingExample>& val,
                           const std::vector<GateTrainingExample>& test,
                           std::size_t num_classes, std::size_t experts,
                           const GateHyperparams& base, uint64_t seed);

}  // namespace emokd
