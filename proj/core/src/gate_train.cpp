#include "emokd/gate_train.hpp"

#include <cmath>

#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/rng.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

namespace {

void check_examples(const std::vector<GateTrainingExample>& examples,
                    const GateConfig& config) {
  for (const GateTrainingExample& ex : examples) {
    if (ex.v1.values.size() != config.num_classes ||
        ex.v2.values.size() != config.num_classes) {
      throw ShapeError("gate example length != C");
    }
    if (!(*ex.v1.space == *ex.v2.space)) {
      throw ShapeError("gate example spaces differ");
    }
    if (ex.target_index >= config.num_classes) {
      throw ShapeError("gate target out of range");
    }
  }
}

}  // namespace

double gate_accuracy(const GateParams& params,
                     const std::vector<GateTrainingExample>& examples) {
  if (examples.empty()) throw EmptyDataset("no gate examples");
  std::size_t correct = 0;
  for (const GateTrainingExample& ex : examples) {
    const auto y = gate_forward_raw(params, ex.v1.values, ex.v2.values);
    if (argmax_index(y) == ex.target_index) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

namespace {

double gate_mean_ce(const GateParams& params,
                    const std::vector<GateTrainingExample>& examples) {
  double loss = 0.0;
  for (const GateTrainingExample& ex : examples) {
    const auto y = gate_forward_raw(params, ex.v1.values, ex.v2.values);
    loss += -log_softmax_raw(y, 1.0)[ex.target_index];
  }
  return loss / static_cast<double>(examples.size());
}

}  // namespace

GateTrainResult train_gate(const std::vector<GateTrainingExample>& train,
                           const std::vector<GateTrainingExample>& val,
                           const GateConfig& config,
                           const GateHyperparams& hyperparams) {
  config.validate();
  if (train.empty()) throw EmptyDataset("empty gate training set");
  if (val.empty()) throw EmptyDataset("empty gate validation set");
  if (!(hyperparams.learning_rate > 0.0)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (hyperparams.batch_size == 0 || hyperparams.max_epochs == 0) {
    throw ConfigError("batch_size and max_epochs must be positive");
  }
  check_examples(train, config);
  check_examples(val, config);

  GateParams params = GateParams::initialized(config, hyperparams.seed);
  AdamState adam(params.theta.size());
  std::vector<double> grad(params.theta.size(), 0.0);

  GateTrainResult result;
  result.params = params;
  double best_val = -1.0;
  // Accuracy moves in long flat stretches at this parameter scale, so the
  // stopping signal is the (smooth) validation loss; the returned
  // checkpoint is still the best-val-accuracy one.
  double best_val_loss = HUGE_VAL;
  std::size_t epochs_since_best = 0;
  Rng order_rng = Rng(hyperparams.seed).child(0x6a7e5);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < hyperparams.max_epochs; ++epoch) {
    Rng epoch_rng = order_rng.child(epoch);
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size();
         start += hyperparams.batch_size) {
      const std::size_t end =
          std::min(train.size(), start + hyperparams.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const GateTrainingExample& ex = train[order[k]];
        batch_loss += gate_loss_and_grad(params, ex.v1.values, ex.v2.values,
                                         ex.target_index, grad);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged("non-finite gate loss", epoch + 1);
      }
      adam_step(params.theta, grad, adam, hyperparams.learning_rate);
      for (double p : params.theta) {
        if (!std::isfinite(p)) {
          throw TrainingDiverged("non-finite gate parameter", epoch + 1);
        }
      }
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(train.size());

    const double train_acc = gate_accuracy(params, train);
    const double val_acc = gate_accuracy(params, val);
    const double val_loss = gate_mean_ce(params, val);
    result.history.epochs.push_back(
        {epoch_loss, 0.0, epoch_loss, train_acc, val_acc});

    if (val_acc > best_val) {
      best_val = val_acc;
      result.params = params;
      result.history.best_epoch = epoch + 1;
    }
    if (val_loss < best_val_loss - 1e-12) {
      best_val_loss = val_loss;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= hyperparams.patience) break;
    }
  }
  return result;
}

void save_gate_checkpoint(const std::filesystem::path& stem,
                          const GateParams& params,
                          const GateCheckpointInfo& info) {
  const std::filesystem::path payload_path = stem.string() + ".bin";
  save_payload_f32(payload_path, params.theta);
  json manifest = {
      {"kind", "gate_checkpoint"},
      {"variant", to_string(params.config.variant)},
      {"num_classes", params.config.num_classes},
      {"experts", params.config.experts},
      {"space", {{"name", info.space->name}, {"labels", info.space->labels}}},
      {"seed", info.seed},
      {"epoch", info.epoch},
      {"metrics", info.metrics},
      {"param_count",
       gate_param_count(params.config.variant, params.config.num_classes,
                        params.config.experts)},
      {"payload_file", payload_path.filename().string()},
      {"payload_digest", to_hex(digest_file(payload_path))},
  };
  atomic_write_file(stem.string() + ".json", manifest.dump(2) + "\n");
}

std::pair<GateParams, GateCheckpointInfo> load_gate_checkpoint(
    const std::filesystem::path& stem) {
  const std::filesystem::path manifest_path = stem.string() + ".json";
  if (!std::filesystem::exists(manifest_path)) {
    throw MissingArtifact("no gate checkpoint at " + stem.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw SchemaError("bad gate manifest: " + std::string(e.what()));
  }
  if (manifest.value("kind", "") != "gate_checkpoint") {
    throw SchemaError(manifest_path.string() + " is not a gate checkpoint");
  }
  GateCheckpointInfo info;
  info.config.variant =
      gate_variant_from_string(manifest.at("variant").get<std::string>());
  info.config.num_classes = manifest.at("num_classes").get<std::size_t>();
  info.config.experts = manifest.at("experts").get<std::size_t>();
  info.space = LabelSpace::make(
      manifest.at("space").at("name").get<std::string>(),
      manifest.at("space").at("labels").get<std::vector<std::string>>());
  info.seed = manifest.at("seed").get<uint64_t>();
  info.epoch = manifest.at("epoch").get<std::size_t>();
  if (manifest.contains("metrics")) {
    info.metrics = manifest.at("metrics").get<std::map<std::string, double>>();
  }

  const std::filesystem::path payload_path =
      manifest_path.parent_path() / manifest.at("payload_file").get<std::string>();
  std::vector<double> theta = load_payload_f32(payload_path);
  const std::size_t expected = gate_param_count(
      info.config.variant, info.config.num_classes, info.config.experts);
  if (theta.size() != expected) {
    throw SchemaError("gate payload has " + std::to_string(theta.size()) +
                      " params, expected " + std::to_string(expected));
  }
  if (to_hex(digest_file(payload_path)) !=
      manifest.at("payload_digest").get<std::string>()) {
    throw SchemaError("gate payload digest mismatch");
  }
  GateParams params;
  params.config = info.config;
  params.theta = std::move(theta);
  return {std::move(params), std::move(info)};
}

}  // namespace emokd
