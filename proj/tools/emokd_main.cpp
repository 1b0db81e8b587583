// emokd: knowledge-distillation + gated-fusion toolkit for visual emotion
// classification. Three trainable stages over frozen predictors:
//   prepare-instructions  build instruction triplets for VLM tuning
//   train-distill         fit the student head against the teacher (stage 2)
//   train-gate            fit the fusion gate over (VLM, student) (stage 3)
// plus evaluate / ablate / complementarity / synth analysis commands.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "emokd/config.hpp"
#include "emokd/errors.hpp"
#include "emokd/pipeline.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
};

emokd::RunConfig load(const GlobalArgs& args) {
  if (args.config_path.empty()) {
    throw emokd::UsageError("--config PATH is required");
  }
  emokd::ConfigOverrides overrides;
  overrides.seed = args.seed;
  overrides.out_dir = args.out_dir;
  return emokd::load_config_file(args.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotion-classifier distillation and gated fusion toolkit"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "run configuration file (JSON)");
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value,
                                  "override the config seed");
  std::string out_value;
  auto* out_opt = app.add_option("--out", out_value,
                                 "override the output directory");

  auto* prepare = app.add_subcommand(
      "prepare-instructions",
      "build categorical + descriptive instruction triplets");
  auto* train_distill =
      app.add_subcommand("train-distill", "stage 2: train the student head");
  auto* train_gate =
      app.add_subcommand("train-gate", "stage 3: train the fusion gate");
  auto* evaluate =
      app.add_subcommand("evaluate", "accuracy, complementarity and trace");
  auto* ablate = app.add_subcommand("ablate", "run one of the sweep studies");
  std::string which;
  ablate->add_option("--which", which, "alpha | depth | gate")->required();
  auto* complementarity = app.add_subcommand(
      "complementarity", "per-sample correctness partition (teacher vs VLM)");
  auto* synth = app.add_subcommand(
      "synth", "emit the synthetic dataset files for the configured spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(emokd::ErrorClass::usage);
  }

  if (*seed_opt) args.seed = seed_value;
  if (*out_opt) args.out_dir = out_value;

  try {
    const emokd::RunConfig config = load(args);
    if (prepare->parsed()) {
      emokd::cmd_prepare_instructions(config);
    } else if (train_distill->parsed()) {
      emokd::cmd_train_distill(config);
    } else if (train_gate->parsed()) {
      emokd::cmd_train_gate(config);
    } else if (evaluate->parsed()) {
      emokd::cmd_evaluate(config);
    } else if (ablate->parsed()) {
      emokd::cmd_ablate(config, which);
    } else if (complementarity->parsed()) {
      emokd::cmd_complementarity(config);
    } else if (synth->parsed()) {
      emokd::cmd_synth(config);
    }
  } catch (const emokd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
