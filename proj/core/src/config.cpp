#include "emokd/config.hpp"

#include <algorithm>

#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

namespace {

// Recursively collects keys not present in the schema; clients.decoding is
// free-form by design.
void collect_unknown_keys(const json& node, const json& schema,
                          const std::string& prefix,
                          std::vector<std::string>& unknown) {
  if (!node.is_object()) return;
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) {
      unknown.push_back(path);
      continue;
    }
    if (schema[key].is_object() && !schema[key].empty()) {
      collect_unknown_keys(value, schema[key], path, unknown);
    }
  }
}

const json& config_schema() {
  static const json schema = {
      {"profile", true},
      {"out", true},
      {"seed", true},
      {"data",
       {{"root", true},
        {"features", true},
        {"teacher", true},
        {"vlm", true},
        {"labels", true}}},
      {"split", {{"train", true}, {"val", true}, {"test", true}, {"seed", true}}},
      {"head",
       {{"input_dim", true}, {"hidden_dims", true}, {"num_classes", true}}},
      {"distill",
       {{"alpha", true},
        {"tau", true},
        {"learning_rate", true},
        {"batch_size", true},
        {"max_epochs", true},
        {"patience", true},
        {"seed", true}}},
      {"gate",
       {{"variant", true},
        {"experts", true},
        {"learning_rate", true},
        {"batch_size", true},
        {"max_epochs", true},
        {"patience", true},
        {"seed", true}}},
      {"synthetic",
       {{"n", true},
        {"num_classes", true},
        {"feature_dim", true},
        {"teacher_accuracy", true},
        {"vlm_accuracy", true},
        {"overlap", true},
        {"confidence_correct", true},
        {"confidence_wrong", true},
        {"cluster_separation", true},
        {"seed", true}}},
      {"instructions", {{"kinds", true}, {"per_kind", true}}},
      {"clients",
       {{"text_endpoint", true},
        {"encoder_endpoint", true},
        {"replay_file", true},
        {"token_env", true},
        {"decoding", json::object()}}},
      {"ablate", {{"alpha_grid", true}, {"depth_grid", true}, {"seeds", true}}},
  };
  return schema;
}

template <class T>
T get_or(const json& node, const char* key, T fallback) {
  if (!node.is_object() || !node.contains(key)) return fallback;
  try {
    return node[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void require_path_exists(const std::string& path, const char* key) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(key) + " path does not exist: " + path);
  }
}

}  // namespace

LabelSpacePtr RunConfig::space() const {
  if (synthetic) return synthetic_space(synthetic->num_classes);
  return dataset_profile(profile).space;
}

RunConfig validate_config(const std::string& raw_text,
                          const ConfigOverrides& overrides) {
  json raw;
  try {
    raw = json::parse(raw_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!raw.is_object()) throw ConfigError("config must be a JSON object");

  std::vector<std::string> unknown;
  collect_unknown_keys(raw, config_schema(), "", unknown);
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s):";
    for (const std::string& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  RunConfig config;
  config.profile = get_or<std::string>(raw, "profile", "");
  config.out_dir = get_or<std::string>(raw, "out", "runs");
  config.seed = get_or<uint64_t>(raw, "seed", 0);
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;

  const json data = raw.value("data", json::object());
  config.data.root = get_or<std::string>(data, "root", "");
  config.data.features = get_or<std::string>(data, "features", "");
  config.data.teacher = get_or<std::string>(data, "teacher", "");
  config.data.vlm = get_or<std::string>(data, "vlm", "");
  config.data.labels = get_or<std::string>(data, "labels", "");

  if (raw.contains("synthetic")) {
    const json s = raw["synthetic"];
    SyntheticSpec spec;
    spec.n = get_or<std::size_t>(s, "n", spec.n);
    spec.num_classes = get_or<std::size_t>(s, "num_classes", spec.num_classes);
    spec.feature_dim = get_or<std::size_t>(s, "feature_dim", spec.feature_dim);
    spec.teacher_accuracy =
        get_or<double>(s, "teacher_accuracy", spec.teacher_accuracy);
    spec.vlm_accuracy = get_or<double>(s, "vlm_accuracy", spec.vlm_accuracy);
    spec.overlap = get_or<double>(s, "overlap", spec.overlap);
    spec.confidence_correct =
        get_or<double>(s, "confidence_correct", spec.confidence_correct);
    spec.confidence_wrong =
        get_or<double>(s, "confidence_wrong", spec.confidence_wrong);
    spec.cluster_separation =
        get_or<double>(s, "cluster_separation", spec.cluster_separation);
    spec.seed = get_or<uint64_t>(s, "seed", config.seed);
    config.synthetic = spec;
  }

  if (config.profile.empty() && !config.synthetic) {
    throw ConfigError("config needs either a dataset profile or a synthetic block");
  }
  if (!config.profile.empty() && config.synthetic) {
    throw ConfigError("profile and synthetic are mutually exclusive");
  }

  LabelSpacePtr space;
  try {
    space = config.space();
    if (config.synthetic) config.synthetic->validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  const json split = raw.value("split", json::object());
  config.split.train = get_or<double>(split, "train", 0.8);
  config.split.val = get_or<double>(split, "val", 0.1);
  config.split.test = get_or<double>(split, "test", 0.1);
  config.split.seed = get_or<uint64_t>(split, "seed", config.seed);

  const json head = raw.value("head", json::object());
  const std::size_t default_input_dim =
      config.synthetic ? config.synthetic->feature_dim : 3584;
  config.head.input_dim =
      get_or<std::size_t>(head, "input_dim", default_input_dim);
  config.head.hidden_dims = get_or<std::vector<std::size_t>>(
      head, "hidden_dims", std::vector<std::size_t>{1024});
  config.head.num_classes =
      get_or<std::size_t>(head, "num_classes", space->size());

  const json distill = raw.value("distill", json::object());
  config.distill.alpha = get_or<double>(distill, "alpha", 0.5);
  config.distill.tau = get_or<double>(distill, "tau", 2.0);
  config.distill.learning_rate =
      get_or<double>(distill, "learning_rate", 1e-3);
  config.distill.batch_size = get_or<std::size_t>(distill, "batch_size", 64);
  config.distill.max_epochs = get_or<std::size_t>(distill, "max_epochs", 30);
  config.distill.patience = get_or<std::size_t>(distill, "patience", 5);
  config.distill.seed = get_or<uint64_t>(distill, "seed", config.seed);

  const json gate = raw.value("gate", json::object());
  config.gate.variant = gate_variant_from_string(
      get_or<std::string>(gate, "variant", "concat_linear"));
  config.gate.num_classes = space->size();
  config.gate.experts = get_or<std::size_t>(gate, "experts", 2);
  config.gate_hyper.learning_rate = get_or<double>(gate, "learning_rate", 1e-3);
  config.gate_hyper.batch_size = get_or<std::size_t>(gate, "batch_size", 64);
  config.gate_hyper.max_epochs = get_or<std::size_t>(gate, "max_epochs", 100);
  config.gate_hyper.patience = get_or<std::size_t>(gate, "patience", 15);
  config.gate_hyper.seed = get_or<uint64_t>(gate, "seed", config.seed);

  const json instructions = raw.value("instructions", json::object());
  if (instructions.contains("kinds")) {
    config.instructions.kinds.clear();
    for (const auto& k : instructions["kinds"]) {
      const TripletKind kind = triplet_kind_from_string(k.get<std::string>());
      if (kind == TripletKind::categorical) {
        throw ConfigError("instructions.kinds lists client-generated kinds only");
      }
      config.instructions.kinds.push_back(kind);
    }
  }
  config.instructions.per_kind =
      get_or<std::size_t>(instructions, "per_kind", 1);

  const json clients = raw.value("clients", json::object());
  config.clients.text_endpoint =
      get_or<std::string>(clients, "text_endpoint", "");
  config.clients.encoder_endpoint =
      get_or<std::string>(clients, "encoder_endpoint", "");
  config.clients.replay_file = get_or<std::string>(clients, "replay_file", "");
  config.clients.token_env =
      get_or<std::string>(clients, "token_env", "EMOKD_API_TOKEN");
  if (clients.contains("decoding")) {
    config.clients.decoding_json = clients["decoding"].dump();
  }

  const json ablate = raw.value("ablate", json::object());
  config.ablate.alpha_grid =
      get_or<std::vector<double>>(ablate, "alpha_grid", {});
  config.ablate.depth_grid = get_or<std::vector<std::vector<std::size_t>>>(
      ablate, "depth_grid", {});
  config.ablate.seeds = get_or<std::size_t>(ablate, "seeds", 1);
  if (config.ablate.seeds == 0) throw ConfigError("ablate.seeds must be >= 1");

  // Cross-field checks; every violation is a ConfigError at this boundary.
  try {
    config.split.validate();
    config.head.validate();
    config.distill.validate();
    config.gate.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (config.head.num_classes != space->size()) {
    throw ConfigError("head num_classes " +
                      std::to_string(config.head.num_classes) +
                      " != class count " + std::to_string(space->size()) +
                      " of " + space->name);
  }
  if (config.synthetic &&
      config.head.input_dim != config.synthetic->feature_dim) {
    throw ConfigError("head input_dim " + std::to_string(config.head.input_dim) +
                      " != synthetic feature_dim " +
                      std::to_string(config.synthetic->feature_dim));
  }

  require_path_exists(config.data.root, "data.root");
  require_path_exists(config.data.features, "data.features");
  require_path_exists(config.data.teacher, "data.teacher");
  require_path_exists(config.data.vlm, "data.vlm");
  require_path_exists(config.data.labels, "data.labels");
  require_path_exists(config.clients.replay_file, "clients.replay_file");

  // Canonical echo: every resolved field, sorted keys, no volatile state.
  json canonical = {
      {"profile", config.profile},
      {"out", config.out_dir},
      {"seed", config.seed},
      {"data",
       {{"root", config.data.root},
        {"features", config.data.features},
        {"teacher", config.data.teacher},
        {"vlm", config.data.vlm},
        {"labels", config.data.labels}}},
      {"split",
       {{"train", config.split.train},
        {"val", config.split.val},
        {"test", config.split.test},
        {"seed", config.split.seed}}},
      {"head",
       {{"input_dim", config.head.input_dim},
        {"hidden_dims", config.head.hidden_dims},
        {"num_classes", config.head.num_classes}}},
      {"distill",
       {{"alpha", config.distill.alpha},
        {"tau", config.distill.tau},
        {"learning_rate", config.distill.learning_rate},
        {"batch_size", config.distill.batch_size},
        {"max_epochs", config.distill.max_epochs},
        {"patience", config.distill.patience},
        {"seed", config.distill.seed}}},
      {"gate",
       {{"variant", to_string(config.gate.variant)},
        {"experts", config.gate.experts},
        {"learning_rate", config.gate_hyper.learning_rate},
        {"batch_size", config.gate_hyper.batch_size},
        {"max_epochs", config.gate_hyper.max_epochs},
        {"patience", config.gate_hyper.patience},
        {"seed", config.gate_hyper.seed}}},
      {"instructions",
       {{"per_kind", config.instructions.per_kind}}},
      {"clients",
       {{"text_endpoint", config.clients.text_endpoint},
        {"encoder_endpoint", config.clients.encoder_endpoint},
        {"replay_file", config.clients.replay_file},
        {"token_env", config.clients.token_env}}},
      {"ablate", {{"seeds", config.ablate.seeds}}},
  };
  json kinds = json::array();
  for (TripletKind k : config.instructions.kinds) kinds.push_back(to_string(k));
  canonical["instructions"]["kinds"] = kinds;
  if (!config.ablate.alpha_grid.empty()) {
    canonical["ablate"]["alpha_grid"] = config.ablate.alpha_grid;
  }
  if (!config.ablate.depth_grid.empty()) {
    canonical["ablate"]["depth_grid"] = config.ablate.depth_grid;
  }
  if (!config.clients.decoding_json.empty()) {
    canonical["clients"]["decoding"] = json::parse(config.clients.decoding_json);
  }
  if (config.synthetic) {
    const SyntheticSpec& s = *config.synthetic;
    canonical["synthetic"] = {
        {"n", s.n},
        {"num_classes", s.num_classes},
        {"feature_dim", s.feature_dim},
        {"teacher_accuracy", s.teacher_accuracy},
        {"vlm_accuracy", s.vlm_accuracy},
        {"overlap", s.overlap},
        {"confidence_correct", s.confidence_correct},
        {"confidence_wrong", s.confidence_wrong},
        {"cluster_separation", s.cluster_separation},
        {"seed", s.seed}};
  }
  config.canonical_json = canonical.dump(2);
  config.run_id = to_hex(fnv1a64(config.canonical_json));
  return config;
}

RunConfig load_config_file(const std::filesystem::path& path,
                           const ConfigOverrides& overrides) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file does not exist: " + path.string());
  }
  return validate_config(read_file(path), overrides);
}

// --- run manifest --------------------------------------------------------

std::string to_string(StageStatus status) {
  switch (status) {
    case StageStatus::pending: return "pending";
    case StageStatus::done: return "done";
    case StageStatus::not_applicable: return "not_applicable";
  }
  throw InvalidInput("bad stage status");
}

StageStatus stage_status_from_string(const std::string& s) {
  if (s == "pending") return StageStatus::pending;
  if (s == "done") return StageStatus::done;
  if (s == "not_applicable") return StageStatus::not_applicable;
  throw SchemaError("bad stage status '" + s + "'");
}

RunManifest RunManifest::create(const RunConfig& config) {
  RunManifest m;
  m.run_id = config.run_id;
  m.config_echo = config.canonical_json;
  // Synthetic runs have no instruction-tuning material; the stage is
  // marked not applicable so stage-2 can start directly.
  m.stages[kStageInstructions] = config.is_synthetic()
                                     ? StageStatus::not_applicable
                                     : StageStatus::pending;
  m.stages[kStageDistill] = StageStatus::pending;
  m.stages[kStageGate] = StageStatus::pending;
  return m;
}

RunManifest RunManifest::load_or_create(const RunConfig& config,
                                        const std::filesystem::path& run_dir) {
  const std::filesystem::path path = run_dir / "manifest.json";
  if (!std::filesystem::exists(path)) return create(config);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw SchemaError("bad run manifest: " + std::string(e.what()));
  }
  RunManifest m = create(config);
  if (j.value("run_id", "") != config.run_id) {
    throw ConfigError("run directory " + run_dir.string() +
                      " belongs to a different config (run_id mismatch)");
  }
  const json stages = j.value("stages", json::object());
  for (const auto& [stage, status] : stages.items()) {
    m.stages[stage] = stage_status_from_string(status.get<std::string>());
  }
  const json digests = j.value("digests", json::object());
  for (const auto& [k, v] : digests.items()) {
    m.digests[k] = v.get<std::string>();
  }
  const json metrics = j.value("metrics", json::object());
  for (const auto& [k, v] : metrics.items()) {
    m.metrics[k] = v.get<double>();
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& run_dir) const {
  json stages_json = json::object();
  for (const auto& [stage, status] : stages) {
    stages_json[stage] = to_string(status);
  }
  json j = {{"run_id", run_id},
            {"config", json::parse(config_echo)},
            {"stages", stages_json},
            {"digests", digests},
            {"metrics", metrics}};
  atomic_write_file(run_dir / "manifest.json", j.dump(2) + "\n");
}

StageStatus RunManifest::status(const std::string& stage) const {
  auto it = stages.find(stage);
  if (it == stages.end()) throw InvalidInput("unknown stage '" + stage + "'");
  return it->second;
}

bool RunManifest::stage_done(const std::string& stage) const {
  return status(stage) == StageStatus::done;
}

void RunManifest::require_ready(const std::string& stage) const {
  static const std::vector<std::string> order = {kStageInstructions,
                                                 kStageDistill, kStageGate};
  for (const std::string& earlier : order) {
    if (earlier == stage) return;
    if (status(earlier) == StageStatus::pending) {
      throw MissingArtifact("stage '" + stage + "' requires stage '" + earlier +
                            "' to be completed first");
    }
  }
  throw InvalidInput("unknown stage '" + stage + "'");
}

void RunManifest::mark_done(const std::string& stage) {
  require_ready(stage);
  stages[stage] = StageStatus::done;
}

}  // namespace emokd
