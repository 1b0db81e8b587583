#include "emokd/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_map>

#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/report.hpp"
#include "emokd/sweeps.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

RunPaths RunPaths::resolve(const RunConfig& config) {
  RunPaths paths;
  paths.run_dir = std::filesystem::path(config.out_dir) / config.run_id;
  paths.checkpoints = paths.run_dir / "checkpoints";
  paths.summary = paths.run_dir / "summary";
  paths.tables = paths.run_dir / "tables";
  paths.plots = paths.run_dir / "plots";
  paths.synth = paths.run_dir / "synth";
  paths.instructions = paths.run_dir / "instructions";
  return paths;
}

namespace {

StageData stage_data_from_bundle(const SyntheticBundle& bundle) {
  StageData data;
  data.space = bundle.space;
  data.ids = bundle.sample_ids;
  data.labels = bundle.truth_labels;
  data.features = bundle.features;
  data.teacher = bundle.teacher;
  data.vlm = bundle.vlm;
  return data;
}

std::pair<std::vector<std::string>, std::vector<std::string>> labeled_ids(
    const RunConfig& config, const LabelSpacePtr& space) {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  if (!config.data.labels.empty()) {
    LabelFile file = load_label_file(config.data.labels);
    if (!(*file.space == *space)) {
      throw SchemaError("label file space '" + file.space->name +
                        "' does not match the configured space");
    }
    for (auto& [id, label] : file.records) {
      ids.push_back(id);
      labels.push_back(label);
    }
  } else if (!config.data.root.empty()) {
    const SampleIndex index =
        scan_dataset(config.data.root, dataset_profile(config.profile));
    for (const SampleEntry& e : index.entries) {
      ids.push_back(e.sample_id);
      labels.push_back(e.label);
    }
  } else {
    throw ConfigError("config needs data.labels or data.root for this command");
  }
  // sorted-id order so splits are reproducible regardless of file order
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ids[a] < ids[b];
  });
  std::vector<std::string> sorted_ids;
  std::vector<std::string> sorted_labels;
  sorted_ids.reserve(ids.size());
  sorted_labels.reserve(ids.size());
  for (std::size_t i : order) {
    sorted_ids.push_back(std::move(ids[i]));
    sorted_labels.push_back(std::move(labels[i]));
  }
  return {std::move(sorted_ids), std::move(sorted_labels)};
}

}  // namespace

StageData load_stage_data(const RunConfig& config, bool need_vlm) {
  if (config.is_synthetic()) {
    return stage_data_from_bundle(generate_synthetic(*config.synthetic));
  }
  StageData data;
  data.space = config.space();
  std::tie(data.ids, data.labels) = labeled_ids(config, data.space);

  if (config.data.features.empty() || config.data.teacher.empty()) {
    throw ConfigError("config needs data.features and data.teacher files");
  }
  FeatureFile features = load_feature_file(config.data.features);
  TeacherFile teacher = load_teacher_file(config.data.teacher);
  if (!(*features.space == *data.space) || !(*teacher.space == *data.space)) {
    throw SchemaError("recorded files use a different label space");
  }
  data.features = std::move(features.records);
  data.teacher = std::move(teacher.records);

  if (need_vlm) {
    if (config.data.vlm.empty()) {
      throw ConfigError("config needs a data.vlm prediction file");
    }
    VlmFile vlm = load_vlm_file(config.data.vlm);
    if (!(*vlm.space == *data.space)) {
      throw SchemaError("vlm file uses a different label space");
    }
    data.vlm = std::move(vlm.records);
  }
  return data;
}

namespace {

struct SplitView {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

SplitView make_split(const StageData& data, const SplitSpec& spec) {
  const auto parts = split_positions(data.ids.size(), spec);
  return {parts[0], parts[1], parts[2]};
}

DistillDataset dataset_for(const StageData& data,
                           const std::vector<std::size_t>& positions) {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  ids.reserve(positions.size());
  labels.reserve(positions.size());
  for (std::size_t pos : positions) {
    ids.push_back(data.ids[pos]);
    labels.push_back(data.labels[pos]);
  }
  return build_distill_dataset(ids, labels, data.features, data.teacher,
                               data.space);
}

std::unordered_map<std::string, const VlmPrediction*> vlm_by_id(
    const StageData& data) {
  std::unordered_map<std::string, const VlmPrediction*> map;
  for (const VlmPrediction& p : data.vlm) map[p.sample_id] = &p;
  return map;
}

// v1 per DD on parse failures: the uniform vector, so stage 3 never
// crashes on an unparseable response.
ProbVector vlm_input_vector(const VlmPrediction* pred,
                            const LabelSpacePtr& space) {
  if (pred && pred->parsed) return pred->parsed->to_prob();
  return uniform_prob(space);
}

std::vector<GateTrainingExample> gate_examples_from_head(
    const StageData& data, const std::vector<std::size_t>& positions,
    const DistillHead& head) {
  const auto vlm = vlm_by_id(data);
  std::unordered_map<std::string, const FeatureRecord*> features;
  for (const FeatureRecord& r : data.features) features[r.sample_id] = &r;

  std::vector<GateTrainingExample> examples;
  examples.reserve(positions.size());
  for (std::size_t pos : positions) {
    const std::string& id = data.ids[pos];
    auto f = features.find(id);
    if (f == features.end()) {
      throw SchemaError("no feature row for sample '" + id + "'");
    }
    auto v = vlm.find(id);
    if (v == vlm.end()) {
      throw SchemaError("no vlm prediction for sample '" + id + "'");
    }
    GateTrainingExample ex;
    ex.v1 = vlm_input_vector(v->second, data.space);
    ex.v2 = student_distribution(f->second->vector, head, data.space);
    ex.target_index = *data.space->index_of(data.labels[pos]);
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::string history_metrics_json(const TrainingHistory& history) {
  if (history.epochs.empty()) return "{}";
  const EpochRecord& last = history.epochs.back();
  json j = {{"epochs", history.epochs.size()},
            {"best_epoch", history.best_epoch},
            {"final_l_total", last.l_total},
            {"final_l_kd", last.l_kd},
            {"final_l_ce", last.l_ce}};
  return j.dump();
}

}  // namespace

void cmd_synth(const RunConfig& config) {
  if (!config.is_synthetic()) {
    throw ConfigError("synth needs a synthetic block in the config");
  }
  const RunPaths paths = RunPaths::resolve(config);
  const SyntheticBundle bundle = generate_synthetic(*config.synthetic);

  FeatureFile features{bundle.space, bundle.feature_dim, bundle.features};
  save_feature_file(paths.synth / "features.txt", features);
  TeacherFile teacher{bundle.space, bundle.teacher};
  save_teacher_file(paths.synth / "teacher.txt", teacher);
  VlmFile vlm{bundle.space, bundle.vlm};
  save_vlm_file(paths.synth / "vlm.txt", vlm);
  LabelFile labels;
  labels.space = bundle.space;
  for (std::size_t i = 0; i < bundle.sample_ids.size(); ++i) {
    labels.records.emplace_back(bundle.sample_ids[i], bundle.truth_labels[i]);
  }
  save_label_file(paths.synth / "labels.txt", labels);

  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);
  manifest.save(paths.run_dir);
  std::cout << "synthetic dataset written to " << paths.synth.string() << "\n";
}

void cmd_prepare_instructions(const RunConfig& config) {
  if (config.is_synthetic()) {
    throw ConfigError("prepare-instructions needs a real dataset profile");
  }
  if (config.data.root.empty()) {
    throw ConfigError("prepare-instructions needs data.root");
  }
  const RunPaths paths = RunPaths::resolve(config);
  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);

  const DatasetProfile profile = dataset_profile(config.profile);
  const SampleIndex index = scan_dataset(config.data.root, profile);

  // Categorical triplets are template-rendered for every sample at once.
  std::vector<InstructionTriplet> categorical;
  categorical.reserve(index.size());
  for (const SampleEntry& e : index.entries) {
    categorical.push_back(build_categorical_triplet(e, profile.space));
  }
  write_triplets(paths.instructions / "categorical.jsonl", categorical);

  if (!config.instructions.kinds.empty()) {
    std::unique_ptr<TextGenerationClient> client;
    if (!config.clients.replay_file.empty()) {
      client = std::make_unique<ReplayTextClient>(config.clients.replay_file);
    } else if (!config.clients.text_endpoint.empty()) {
      client = std::make_unique<RemoteTextClient>(
          config.clients.text_endpoint, config.clients.token_env,
          config.clients.decoding_json);
    } else {
      throw ConfigError(
          "descriptive kinds requested but no text client configured");
    }

    const std::filesystem::path descriptive_path =
        paths.instructions / "descriptive.jsonl";
    std::set<std::string> done;
    if (std::filesystem::exists(descriptive_path)) {
      for (const InstructionTriplet& t : read_triplets(descriptive_path)) {
        done.insert(t.image_ref);
      }
    }
    std::filesystem::create_directories(paths.instructions);
    std::ofstream out(descriptive_path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open " + descriptive_path.string());

    for (const SampleEntry& e : index.entries) {
      const std::string ref = e.image_path.empty() ? e.sample_id : e.image_path;
      if (done.count(ref)) continue;  // resumable: completed samples skipped
      std::vector<InstructionTriplet> triplets;
      for (std::size_t rep = 0; rep < config.instructions.per_kind; ++rep) {
        auto generated =
            generate_descriptive_triplets(e, config.instructions.kinds, *client);
        triplets.insert(triplets.end(), generated.begin(), generated.end());
      }
      // All triplets of one sample land together, so an interrupted run
      // leaves a valid file that a rerun extends.
      for (const InstructionTriplet& t : triplets) {
        json record = {{"image_ref", t.image_ref},
                       {"kind", to_string(t.kind)},
                       {"question", t.question},
                       {"response", t.response}};
        out << record.dump() << '\n';
      }
      out.flush();
      if (!out) throw IoError("short write to " + descriptive_path.string());
    }
  }

  manifest.mark_done(kStageInstructions);
  manifest.save(paths.run_dir);
  std::cout << "instruction triplets written to "
            << paths.instructions.string() << "\n";
}

void cmd_train_distill(const RunConfig& config) {
  const RunPaths paths = RunPaths::resolve(config);
  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);
  if (manifest.stage_done(kStageDistill) &&
      std::filesystem::exists(paths.checkpoints / "head.bin")) {
    std::cout << "distill stage already complete for run " << config.run_id
              << "\n";
    return;
  }
  manifest.require_ready(kStageDistill);

  const StageData data = load_stage_data(config, /*need_vlm=*/false);
  const SplitView split = make_split(data, config.split);
  const DistillDataset train = dataset_for(data, split.train);
  const DistillDataset val = dataset_for(data, split.val);
  if (train.feature_dim != config.head.input_dim) {
    throw ConfigError("feature dim " + std::to_string(train.feature_dim) +
                      " != head input_dim " +
                      std::to_string(config.head.input_dim));
  }

  const DistillTrainResult result =
      train_distill_head(train, val, config.head, config.distill);

  HeadCheckpointInfo info;
  info.config = config.head;
  info.space = data.space;
  info.seed = config.distill.seed;
  info.epoch = result.history.best_epoch;
  const EpochRecord& best =
      result.history.epochs[result.history.best_epoch - 1];
  info.metrics = {{"val_accuracy", best.val_accuracy},
                  {"train_accuracy", best.train_accuracy},
                  {"l_total", best.l_total},
                  {"l_kd", best.l_kd},
                  {"l_ce", best.l_ce}};
  save_head_checkpoint(paths.head_stem(), result.head, info);
  atomic_write_file(paths.tables / "distill_history.table",
                    history_table(result.history));

  manifest.mark_done(kStageDistill);
  manifest.digests["head"] =
      to_hex(digest_file(paths.checkpoints / "head.bin"));
  manifest.metrics["distill_val_accuracy"] = best.val_accuracy;
  manifest.save(paths.run_dir);
  std::cout << "distill head trained: val_accuracy="
            << format_double(best.val_accuracy) << " ("
            << result.history.epochs.size() << " epochs, "
            << history_metrics_json(result.history) << ")\n";
}

void cmd_train_gate(const RunConfig& config) {
  const RunPaths paths = RunPaths::resolve(config);
  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);
  if (manifest.stage_done(kStageGate) &&
      std::filesystem::exists(paths.checkpoints / "gate.bin")) {
    std::cout << "gate stage already complete for run " << config.run_id
              << "\n";
    return;
  }
  manifest.require_ready(kStageGate);

  auto [head, head_info] = load_head_checkpoint(paths.head_stem());
  const StageData data = load_stage_data(config, /*need_vlm=*/true);
  if (!(*head_info.space == *data.space)) {
    throw SchemaError("head checkpoint space differs from the data space");
  }
  const SplitView split = make_split(data, config.split);
  const auto train = gate_examples_from_head(data, split.train, head);
  const auto val = gate_examples_from_head(data, split.val, head);

  const GateTrainResult result =
      train_gate(train, val, config.gate, config.gate_hyper);

  GateCheckpointInfo info;
  info.config = config.gate;
  info.space = data.space;
  info.seed = config.gate_hyper.seed;
  info.epoch = result.history.best_epoch;
  const EpochRecord& best =
      result.history.epochs[result.history.best_epoch - 1];
  info.metrics = {{"val_accuracy", best.val_accuracy},
                  {"train_accuracy", best.train_accuracy}};
  save_gate_checkpoint(paths.gate_stem(), result.params, info);
  atomic_write_file(paths.tables / "gate_history.table",
                    history_table(result.history));

  manifest.mark_done(kStageGate);
  manifest.digests["gate"] =
      to_hex(digest_file(paths.checkpoints / "gate.bin"));
  manifest.metrics["gate_val_accuracy"] = best.val_accuracy;
  manifest.save(paths.run_dir);
  std::cout << "gate trained (" << to_string(config.gate.variant)
            << "): val_accuracy=" << format_double(best.val_accuracy) << "\n";
}

EvalReport cmd_evaluate(const RunConfig& config) {
  const RunPaths paths = RunPaths::resolve(config);
  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);
  if (!manifest.stage_done(kStageDistill) || !manifest.stage_done(kStageGate)) {
    throw MissingArtifact("evaluate needs completed distill and gate stages");
  }
  auto [head, head_info] = load_head_checkpoint(paths.head_stem());
  auto [gate, gate_info] = load_gate_checkpoint(paths.gate_stem());

  const StageData data = load_stage_data(config, /*need_vlm=*/true);
  const SplitView split = make_split(data, config.split);
  const auto vlm = vlm_by_id(data);
  std::unordered_map<std::string, const FeatureRecord*> features;
  for (const FeatureRecord& r : data.features) features[r.sample_id] = &r;
  std::unordered_map<std::string, const TeacherRecord*> teacher;
  for (const TeacherRecord& r : data.teacher) teacher[r.sample_id] = &r;

  EvalReport report;
  report.dataset = config.is_synthetic()
                       ? "synthetic(n=" + std::to_string(config.synthetic->n) + ")"
                       : config.profile;

  std::vector<std::string> truth;
  std::vector<std::string> vlm_preds;
  std::vector<std::string> student_preds;
  std::vector<std::string> fused_preds;
  std::vector<std::string> teacher_preds;
  for (std::size_t pos : split.test) {
    const std::string& id = data.ids[pos];
    auto f = features.find(id);
    auto v = vlm.find(id);
    auto t = teacher.find(id);
    if (f == features.end() || v == vlm.end() || t == teacher.end()) {
      throw SchemaError("missing record for sample '" + id + "'");
    }
    const ProbVector v1 = vlm_input_vector(v->second, data.space);
    const ProbVector v2 =
        student_distribution(f->second->vector, head, data.space);
    auto [fused_label, fused_probs] = fuse_predict(v1, v2, gate);

    truth.push_back(data.labels[pos]);
    // an unparseable VLM answer scores as wrong
    vlm_preds.push_back(v->second->parsed ? v->second->parsed->label() : "-");
    student_preds.push_back(argmax_label(v2));
    fused_preds.push_back(fused_label);
    teacher_preds.push_back(
        data.space->labels[argmax_index(t->second->logits)]);

    report.trace.push_back({id, vlm_preds.back(), student_preds.back(),
                            fused_label, data.labels[pos]});
  }

  report.accuracies["vlm"] = accuracy(vlm_preds, truth);
  report.accuracies["student"] = accuracy(student_preds, truth);
  report.accuracies["teacher"] = accuracy(teacher_preds, truth);
  report.accuracies["fused"] = accuracy(fused_preds, truth);
  report.partition = complementarity(student_preds, vlm_preds, truth);
  report.parameter_counts["head"] = param_count(config.head);
  report.parameter_counts["gate"] = gate_param_count(
      config.gate.variant, config.gate.num_classes, config.gate.experts);

  // Sanity bound: a gate fed with v1/v2 cannot beat the selector that is
  // right whenever either input is.
  const double oracle = oracle_upper_bound(report.partition);
  if (report.accuracies["fused"] > oracle + 1e-12) {
    throw Error(ErrorClass::training,
                "fused accuracy exceeds the oracle upper bound");
  }

  emit_eval_report(report, config.canonical_json, paths.run_dir);
  manifest.metrics["fused_test_accuracy"] = report.accuracies["fused"];
  manifest.save(paths.run_dir);
  std::cout << "evaluation: fused=" << format_double(report.accuracies["fused"])
            << " student=" << format_double(report.accuracies["student"])
            << " vlm=" << format_double(report.accuracies["vlm"])
            << " oracle=" << format_double(oracle) << "\n";
  return report;
}

namespace {

SweepResult average_sweeps(std::vector<SweepResult> runs) {
  SweepResult merged = runs.front();
  for (std::size_t p = 0; p < merged.points.size(); ++p) {
    double acc = 0.0;
    double kd = 0.0;
    for (const SweepResult& r : runs) {
      acc += r.points[p].accuracy;
      if (r.points[p].final_l_kd) kd += *r.points[p].final_l_kd;
    }
    merged.points[p].accuracy = acc / static_cast<double>(runs.size());
    if (merged.points[p].final_l_kd) {
      merged.points[p].final_l_kd = kd / static_cast<double>(runs.size());
    }
  }
  return merged;
}

}  // namespace

void cmd_ablate(const RunConfig& config, const std::string& which) {
  if (which != "alpha" && which != "depth" && which != "gate") {
    throw UsageError("ablate --which must be alpha, depth or gate");
  }
  const RunPaths paths = RunPaths::resolve(config);
  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);

  const bool need_vlm = which == "gate";
  const StageData data = load_stage_data(config, need_vlm);
  const SplitView split = make_split(data, config.split);

  std::vector<SweepResult> runs;
  for (std::size_t s = 0; s < config.ablate.seeds; ++s) {
    const uint64_t seed = config.seed + s;
    if (which == "alpha") {
      const std::vector<double> grid = config.ablate.alpha_grid.empty()
                                           ? default_alpha_grid()
                                           : config.ablate.alpha_grid;
      runs.push_back(run_alpha_sweep(grid, dataset_for(data, split.train),
                                     dataset_for(data, split.val), config.head,
                                     config.distill, seed));
    } else if (which == "depth") {
      const auto grid = config.ablate.depth_grid.empty()
                            ? default_depth_grid()
                            : config.ablate.depth_grid;
      runs.push_back(run_depth_sweep(grid, dataset_for(data, split.train),
                                     dataset_for(data, split.val),
                                     config.head.input_dim, config.distill,
                                     seed));
    } else {
      // Gate examples for the ablation come straight from the recorded
      // predictors: v2 is the teacher distribution at tau=1. The stage-3
      // pipeline proper instead derives v2 from the trained head.
      auto examples_for = [&](const std::vector<std::size_t>& positions) {
        const auto vlm = vlm_by_id(data);
        std::unordered_map<std::string, const TeacherRecord*> teacher;
        for (const TeacherRecord& r : data.teacher) teacher[r.sample_id] = &r;
        std::vector<GateTrainingExample> examples;
        examples.reserve(positions.size());
        for (std::size_t pos : positions) {
          const std::string& id = data.ids[pos];
          auto v = vlm.find(id);
          auto t = teacher.find(id);
          if (v == vlm.end() || t == teacher.end()) {
            throw SchemaError("missing record for sample '" + id + "'");
          }
          GateTrainingExample ex;
          ex.v1 = vlm_input_vector(v->second, data.space);
          ex.v2 = ProbVector{data.space, softmax_raw(t->second->logits, 1.0)};
          ex.target_index = *data.space->index_of(data.labels[pos]);
          examples.push_back(std::move(ex));
        }
        return examples;
      };
      GateHyperparams hyper = config.gate_hyper;
      hyper.seed = seed;
      runs.push_back(run_gate_sweep(
          all_gate_variants(), examples_for(split.train),
          examples_for(split.val), examples_for(split.test),
          data.space->size(), config.gate.experts, hyper, seed));
    }
  }

  const SweepResult merged =
      runs.size() == 1 ? runs.front() : average_sweeps(std::move(runs));
  emit_sweep_report(merged, config.canonical_json, paths.run_dir);
  manifest.save(paths.run_dir);
  std::cout << merged.name << ": " << merged.points.size()
            << " grid points written to " << paths.summary.string() << "\n";
}

ComplementarityPartition cmd_complementarity(const RunConfig& config) {
  const RunPaths paths = RunPaths::resolve(config);
  RunManifest manifest = RunManifest::load_or_create(config, paths.run_dir);

  const StageData data = load_stage_data(config, /*need_vlm=*/true);
  std::unordered_map<std::string, const TeacherRecord*> teacher;
  for (const TeacherRecord& r : data.teacher) teacher[r.sample_id] = &r;
  const auto vlm = vlm_by_id(data);

  std::vector<std::string> teacher_preds;
  std::vector<std::string> vlm_preds;
  std::vector<std::string> truth;
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    auto t = teacher.find(data.ids[i]);
    auto v = vlm.find(data.ids[i]);
    if (t == teacher.end() || v == vlm.end()) {
      throw SchemaError("missing record for sample '" + data.ids[i] + "'");
    }
    teacher_preds.push_back(
        data.space->labels[argmax_index(t->second->logits)]);
    vlm_preds.push_back(v->second->parsed ? v->second->parsed->label() : "-");
    truth.push_back(data.labels[i]);
  }

  const ComplementarityPartition partition =
      complementarity(teacher_preds, vlm_preds, truth);
  const std::string dataset =
      config.is_synthetic()
          ? "synthetic(n=" + std::to_string(config.synthetic->n) + ")"
          : config.profile;
  emit_complementarity_report(partition, dataset, config.canonical_json,
                              paths.run_dir);
  manifest.save(paths.run_dir);
  std::cout << "complementarity: both=" << format_double(partition.both)
            << " teacher_only=" << format_double(partition.a_only)
            << " vlm_only=" << format_double(partition.b_only)
            << " neither=" << format_double(partition.neither) << "\n";
  return partition;
}

}  // namespace emokd
