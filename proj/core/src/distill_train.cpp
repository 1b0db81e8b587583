#include "emokd/distill_train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/rng.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw ShapeError("adam buffer size mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

std::string history_table(const TrainingHistory& history) {
  std::string out = "epoch\tl_total\tl_kd\tl_ce\ttrain_acc\tval_acc\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochRecord& r = history.epochs[e];
    out += std::to_string(e + 1);
    out += '\t';
    out += format_double(r.l_total);
    out += '\t';
    out += format_double(r.l_kd);
    out += '\t';
    out += format_double(r.l_ce);
    out += '\t';
    out += format_double(r.train_accuracy);
    out += '\t';
    out += format_double(r.val_accuracy);
    out += '\n';
  }
  return out;
}

DistillDataset build_distill_dataset(
    const std::vector<std::string>& ids, const std::vector<std::string>& labels,
    const std::vector<FeatureRecord>& features,
    const std::vector<TeacherRecord>& teacher, const LabelSpacePtr& space) {
  if (ids.size() != labels.size()) {
    throw ShapeError("ids/labels length mismatch");
  }
  std::unordered_map<std::string, const FeatureRecord*> feat_by_id;
  for (const FeatureRecord& r : features) feat_by_id[r.sample_id] = &r;
  std::unordered_map<std::string, const TeacherRecord*> teach_by_id;
  for (const TeacherRecord& r : teacher) teach_by_id[r.sample_id] = &r;

  DistillDataset out;
  out.space = space;
  out.n = ids.size();
  const std::size_t C = space->size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto f = feat_by_id.find(ids[i]);
    if (f == feat_by_id.end()) {
      throw SchemaError("no feature row for sample '" + ids[i] + "'");
    }
    auto t = teach_by_id.find(ids[i]);
    if (t == teach_by_id.end()) {
      throw SchemaError("no teacher row for sample '" + ids[i] + "'");
    }
    if (out.feature_dim == 0) {
      out.feature_dim = f->second->vector.size();
      out.features.reserve(out.n * out.feature_dim);
      out.teacher_logits.reserve(out.n * C);
    }
    if (f->second->vector.size() != out.feature_dim) {
      throw SchemaError("feature dim mismatch for sample '" + ids[i] + "'");
    }
    if (t->second->logits.size() != C) {
      throw SchemaError("teacher logit length mismatch for sample '" + ids[i] + "'");
    }
    auto label_idx = space->index_of(labels[i]);
    if (!label_idx) {
      throw OutOfVocabulary("label '" + labels[i] + "' not in space '" +
                            space->name + "'");
    }
    out.features.insert(out.features.end(), f->second->vector.begin(),
                        f->second->vector.end());
    out.teacher_logits.insert(out.teacher_logits.end(),
                              t->second->logits.begin(),
                              t->second->logits.end());
    out.targets.push_back(*label_idx);
    out.sample_ids.push_back(ids[i]);
  }
  return out;
}

namespace {

struct EvalPass {
  double l_total = 0.0;
  double l_kd = 0.0;
  double l_ce = 0.0;
  double accuracy = 0.0;
};

EvalPass evaluate_head(const DistillHead& head, const DistillDataset& data,
                       double alpha, double tau) {
  EvalPass pass;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto logits = head_forward_raw(head, data.feature_row(i));
    const double kd = kd_loss(logits, data.teacher_row(i), tau);
    const double ce = ce_loss(logits, data.targets[i]);
    pass.l_kd += kd;
    pass.l_ce += ce;
    pass.l_total += alpha * kd + (1.0 - alpha) * ce;
    if (argmax_index(logits) == data.targets[i]) ++correct;
  }
  const double inv = 1.0 / static_cast<double>(data.n);
  pass.l_total *= inv;
  pass.l_kd *= inv;
  pass.l_ce *= inv;
  pass.accuracy = static_cast<double>(correct) * inv;
  return pass;
}

}  // namespace

double head_accuracy(const DistillHead& head, const DistillDataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    if (argmax_index(head_forward_raw(head, data.feature_row(i))) ==
        data.targets[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.n);
}

double head_teacher_agreement(const DistillHead& head,
                              const DistillDataset& data) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto logits = head_forward_raw(head, data.feature_row(i));
    if (argmax_index(logits) == argmax_index(data.teacher_row(i))) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(data.n);
}

DistillTrainResult train_distill_head(const DistillDataset& train,
                                      const DistillDataset& val,
                                      const DistillHeadConfig& config,
                                      const DistillHyperparams& hyperparams) {
  hyperparams.validate();
  config.validate();
  if (train.n == 0) throw EmptyDataset("empty training set");
  if (val.n == 0) throw EmptyDataset("empty validation set");
  if (train.feature_dim != config.input_dim) {
    throw SchemaError("feature dim " + std::to_string(train.feature_dim) +
                      " != head input dim " + std::to_string(config.input_dim));
  }
  if (train.space->size() != config.num_classes) {
    throw SchemaError("class count mismatch between data and head config");
  }

  DistillHead head = DistillHead::initialized(config, hyperparams.seed);
  AdamState adam(head.params.size());
  std::vector<double> grad(head.params.size(), 0.0);

  DistillTrainResult result;
  result.head = head;  // placeholder until a val pass happens
  double best_val = -1.0;
  std::size_t epochs_since_best = 0;
  Rng order_rng = Rng(hyperparams.seed).child(0xba7c);

  std::vector<std::size_t> order(train.n);
  for (std::size_t i = 0; i < train.n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < hyperparams.max_epochs; ++epoch) {
    Rng epoch_rng = order_rng.child(epoch);
    epoch_rng.shuffle(order);

    for (std::size_t start = 0; start < train.n;
         start += hyperparams.batch_size) {
      const std::size_t end = std::min(train.n, start + hyperparams.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const LossBreakdown loss = accumulate_loss_gradients(
            head, train.feature_row(i), train.teacher_row(i), train.targets[i],
            hyperparams.alpha, hyperparams.tau, grad);
        batch_loss += loss.total;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged("non-finite training loss", epoch + 1);
      }
      adam_step(head.params, grad, adam, hyperparams.learning_rate);
      for (double p : head.params) {
        if (!std::isfinite(p)) {
          throw TrainingDiverged("non-finite parameter", epoch + 1);
        }
      }
    }

    const EvalPass train_pass =
        evaluate_head(head, train, hyperparams.alpha, hyperparams.tau);
    const EvalPass val_pass =
        evaluate_head(head, val, hyperparams.alpha, hyperparams.tau);
    if (!std::isfinite(train_pass.l_total)) {
      throw TrainingDiverged("non-finite epoch loss", epoch + 1);
    }
    result.history.epochs.push_back({train_pass.l_total, train_pass.l_kd,
                                     train_pass.l_ce, train_pass.accuracy,
                                     val_pass.accuracy});

    if (val_pass.accuracy > best_val) {
      best_val = val_pass.accuracy;
      result.head = head;
      result.history.best_epoch = epoch + 1;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= hyperparams.patience) break;
    }
  }
  return result;
}

void save_payload_f32(const std::filesystem::path& path,
                      std::span<const double> values) {
  std::string bytes;
  bytes.resize(values.size() * sizeof(float));
  auto* out = reinterpret_cast<float*>(bytes.data());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(values[i]);
  }
  atomic_write_file(path, bytes);
}

std::vector<double> load_payload_f32(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifact("no payload file " + path.string());
  }
  const std::string bytes = read_file(path);
  if (bytes.size() % sizeof(float) != 0) {
    throw SchemaError("payload size not a multiple of 4: " + path.string());
  }
  const auto* in = reinterpret_cast<const float*>(bytes.data());
  std::vector<double> values(bytes.size() / sizeof(float));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(in[i]);
  }
  return values;
}

namespace {

json space_json(const LabelSpacePtr& space) {
  return json{{"name", space->name}, {"labels", space->labels}};
}

LabelSpacePtr space_from(const json& j) {
  return LabelSpace::make(j.at("name").get<std::string>(),
                          j.at("labels").get<std::vector<std::string>>());
}

}  // namespace

void save_head_checkpoint(const std::filesystem::path& stem,
                          const DistillHead& head,
                          const HeadCheckpointInfo& info) {
  const std::filesystem::path payload_path = stem.string() + ".bin";
  save_payload_f32(payload_path, head.params);
  json manifest = {
      {"kind", "head_checkpoint"},
      {"config",
       {{"input_dim", head.config.input_dim},
        {"hidden_dims", head.config.hidden_dims},
        {"num_classes", head.config.num_classes}}},
      {"space", space_json(info.space)},
      {"seed", info.seed},
      {"epoch", info.epoch},
      {"metrics", info.metrics},
      {"param_count", param_count(head.config)},
      {"payload_file", payload_path.filename().string()},
      {"payload_digest", to_hex(digest_file(payload_path))},
  };
  atomic_write_file(stem.string() + ".json", manifest.dump(2) + "\n");
}

std::pair<DistillHead, HeadCheckpointInfo> load_head_checkpoint(
    const std::filesystem::path& stem) {
  const std::filesystem::path manifest_path = stem.string() + ".json";
  if (!std::filesystem::exists(manifest_path)) {
    throw MissingArtifact("no head checkpoint at " + stem.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw SchemaError("bad checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("kind", "") != "head_checkpoint") {
    throw SchemaError(manifest_path.string() + " is not a head checkpoint");
  }
  HeadCheckpointInfo info;
  DistillHeadConfig config;
  config.input_dim = manifest.at("config").at("input_dim").get<std::size_t>();
  config.hidden_dims =
      manifest.at("config").at("hidden_dims").get<std::vector<std::size_t>>();
  config.num_classes = manifest.at("config").at("num_classes").get<std::size_t>();
  info.config = config;
  info.space = space_from(manifest.at("space"));
  info.seed = manifest.at("seed").get<uint64_t>();
  info.epoch = manifest.at("epoch").get<std::size_t>();
  if (manifest.contains("metrics")) {
    info.metrics = manifest.at("metrics").get<std::map<std::string, double>>();
  }

  const std::filesystem::path payload_path =
      manifest_path.parent_path() / manifest.at("payload_file").get<std::string>();
  std::vector<double> params = load_payload_f32(payload_path);
  if (params.size() != param_count(config)) {
    throw SchemaError("payload has " + std::to_string(params.size()) +
                      " params, expected " + std::to_string(param_count(config)));
  }
  const std::string digest = to_hex(digest_file(payload_path));
  if (digest != manifest.at("payload_digest").get<std::string>()) {
    throw SchemaError("payload digest mismatch for " + payload_path.string());
  }
  DistillHead head;
  head.config = config;
  head.params = std::move(params);
  return {std::move(head), std::move(info)};
}

}  // namespace emokd
