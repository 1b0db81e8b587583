#include "emokd/sweeps.hpp"

#include <algorithm>
#include <cmath>

#include "emokd/errors.hpp"
#include "emokd/util.hpp"

namespace emokd {

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(static_cast<double>(i) / 10.0);
  return grid;
}

std::vector<std::vector<std::size_t>> default_depth_grid() {
  return {{1024},
          {1024, 512},
          {1024, 512, 256},
          {1024, 512, 256, 128},
          {1024, 512, 256, 128, 64}};
}

namespace {

std::string bracket_label(const std::vector<std::size_t>& dims) {
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(dims[i]);
  }
  out += "]";
  return out;
}

}  // namespace

SweepResult run_alpha_sweep(const std::vector<double>& grid,
                            const DistillDataset& train,
                            const DistillDataset& val,
                            const DistillHeadConfig& config,
                            const DistillHyperparams& base, uint64_t seed) {
  if (grid.empty()) throw InvalidGrid("empty alpha grid");
  for (double a : grid) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw InvalidGrid("alpha grid point " + std::to_string(a) +
                        " outside [0, 1]");
    }
  }
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());

  SweepResult result;
  result.name = "alpha_sweep";
  result.swept = "alpha";
  for (double alpha : sorted) {
    DistillHyperparams hp = base;
    hp.alpha = alpha;
    hp.seed = seed;
    DistillTrainResult run;
    try {
      run = train_distill_head(train, val, config, hp);
    } catch (const TrainingDiverged& e) {
      throw TrainingDiverged("alpha=" + format_double(alpha) + ": " + e.what(),
                             e.epoch());
    }
    SweepPoint point;
    point.label = format_double(alpha);
    point.x = alpha;
    double best = 0.0;
    for (const EpochRecord& r : run.history.epochs) {
      best = std::max(best, r.val_accuracy);
    }
    point.accuracy = best;
    point.final_l_kd = run.history.epochs.back().l_kd;
    result.points.push_back(std::move(point));
  }
  return result;
}

SweepResult run_depth_sweep(const std::vector<std::vector<std::size_t>>& grids,
                            const DistillDataset& train,
                            const DistillDataset& val, std::size_t input_dim,
                            const DistillHyperparams& base, uint64_t seed) {
  if (grids.empty()) throw InvalidGrid("empty depth grid");
  SweepResult result;
  result.name = "depth_sweep";
  result.swept = "hidden layers";
  for (std::size_t gi = 0; gi < grids.size(); ++gi) {
    DistillHeadConfig config;
    config.input_dim = input_dim;
    config.hidden_dims = grids[gi];
    config.num_classes = train.space->size();

    DistillHyperparams hp = base;
    hp.seed = seed;
    const DistillTrainResult run = train_distill_head(train, val, config, hp);

    SweepPoint point;
    point.label = bracket_label(grids[gi]);
    point.x = static_cast<double>(grids[gi].size());
    double best = 0.0;
    for (const EpochRecord& r : run.history.epochs) {
      best = std::max(best, r.val_accuracy);
    }
    point.accuracy = best;
    point.param_count = param_count(config);
    result.points.push_back(std::move(point));
  }
  return result;
}

SweepResult run_gate_sweep(const std::vector<GateVariant>& variants,
                           const std::vector<GateTrainingExample>& train,
                           const std::vector<GateTrainingExample>& val,
                           const std::vector<GateTrainingExample>& test,
                           std::size_t num_classes, std::size_t experts,
                           const GateHyperparams& base, uint64_t seed) {
  if (variants.empty()) throw InvalidGrid("empty gate variant list");
  SweepResult result;
  result.name = "gate_sweep";
  result.swept = "gate variant";
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    GateConfig config;
    config.variant = variants[vi];
    config.num_classes = num_classes;
    config.experts = experts;

    GateHyperparams hp = base;
    hp.seed = seed;
    const GateTrainResult run = train_gate(train, val, config, hp);

    SweepPoint point;
    point.label = to_string(variants[vi]);
    point.x = static_cast<double>(vi);
    point.accuracy = gate_accuracy(run.params, test);
    point.param_count = gate_param_count(variants[vi], num_classes, experts);
    result.points.push_back(std::move(point));
  }
  return result;
}

}  // namespace emokd
