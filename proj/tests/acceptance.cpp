// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Criteria 1-8 cover parameter-count reproduction, the loss stack,
// gradient correctness, stage-2 and stage-3 training behavior, the
// complementarity algebra, template/parsing fidelity and pipeline
// determinism.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "emokd/config.hpp"
#include "emokd/dataset.hpp"
#include "emokd/distill_train.hpp"
#include "emokd/errors.hpp"
#include "emokd/gate_train.hpp"
#include "emokd/instructions.hpp"
#include "emokd/metrics.hpp"
#include "emokd/pipeline.hpp"
#include "emokd/records.hpp"
#include "emokd/rng.hpp"
#include "emokd/synthetic.hpp"
#include "emokd/util.hpp"

#include "naive_oracles.hpp"

using namespace emokd;
using emokd::testing::naive_softmax;
using emokd::testing::naive_total_loss;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

// ---------------------------------------------------------------------
// 1. parameter-count reproduction (exact integers)
Check criterion_1() {
  Check c;
  const std::vector<std::pair<std::vector<std::size_t>,
                              std::pair<std::size_t, std::size_t>>>
      rows = {
          {{1024}, {3679240, 3677190}},
          {{1024, 512}, {4199944, 4198918}},
          {{1024, 512, 256}, {4329224, 4328710}},
          {{1024, 512, 256, 128}, {4361096, 4360838}},
          {{1024, 512, 256, 128, 64}, {4368840, 4368710}},
      };
  for (const auto& [hidden, expected] : rows) {
    DistillHeadConfig config{3584, hidden, 8};
    c.require(param_count(config) == expected.first,
              "8-class count mismatch for depth " + std::to_string(hidden.size()));
    config.num_classes = 6;
    c.require(param_count(config) == expected.second,
              "6-class count mismatch for depth " + std::to_string(hidden.size()));
  }
  // combined-system arithmetic: total minus VLM minus head leaves the gate
  const long long total = 1095550096LL;
  const long long vlm = 1091870720LL;
  const long long head = 3679240LL;
  c.require(total - vlm - head == 136, "combined-count arithmetic is off");
  c.require(gate_param_count(GateVariant::concat_linear, 8) == 136,
            "concat_linear gate count != 136");
  return c;
}

// ---------------------------------------------------------------------
// 2. loss-math suite
Check criterion_2() {
  Check c;
  Rng rng(212);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t C = 2 + rng.uniform_index(7);
    std::vector<double> t(C);
    std::vector<double> s(C);
    for (double& v : t) v = rng.uniform(-8.0, 8.0);
    for (double& v : s) v = rng.uniform(-8.0, 8.0);
    const double tau = rng.uniform(0.5, 6.0);
    const double kl = kd_loss(s, t, tau);
    c.require(kl >= 0.0, "kd_loss went negative");

    std::vector<double> shifted(t);
    const double shift = rng.uniform(-4.0, 4.0);
    for (double& v : shifted) v += shift;
    c.require(kd_loss(shifted, t, tau) < 1e-12,
              "kd_loss not ~0 for equal softened distributions");
    std::vector<double> different(t);
    different[0] += 1.0;
    c.require(kd_loss(different, t, tau) > 0.0,
              "kd_loss zero for different distributions");

    std::vector<double> t_scaled(t);
    std::vector<double> s_scaled(s);
    for (double& v : t_scaled) v /= tau;
    for (double& v : s_scaled) v /= tau;
    c.require(std::abs(kl - tau * tau * kd_loss(s_scaled, t_scaled, 1.0)) < 1e-9,
              "tau^2 prefactor identity broken");

    const std::size_t target = rng.uniform_index(C);
    const std::vector<double> ps = naive_softmax(s, 1.0);
    c.require(std::abs(ce_loss(s, target) + std::log(ps[target])) < 1e-12,
              "ce_loss != -ln p_s(true)");

    const double kd_val = rng.uniform(0.0, 3.0);
    const double ce_val = rng.uniform(0.0, 3.0);
    c.require(total_loss(kd_val, ce_val, 0.0) == ce_val,
              "total_loss(alpha=0) not exactly ce");
    c.require(total_loss(kd_val, ce_val, 1.0) == kd_val,
              "total_loss(alpha=1) not exactly kd");
  }
  // worked scalar example
  const double worked = kd_loss(std::vector<double>{0.0, 0.0},
                                std::vector<double>{std::log(2.0), 0.0}, 1.0);
  c.require(std::abs(worked - 0.056633) < 1e-5,
            "worked kd example off: got " + format_double(worked));
  return c;
}

// ---------------------------------------------------------------------
// 3. gradient correctness vs central finite differences
Check criterion_3() {
  Check c;
  Rng rng(313);
  const double step = 1e-4;
  int heads_checked = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 22; ++trial) {
    DistillHeadConfig config;
    config.input_dim = 2 + rng.uniform_index(7);
    config.num_classes = 2 + rng.uniform_index(3);
    const std::size_t depth = rng.uniform_index(4);
    for (std::size_t l = 0; l < depth; ++l) {
      config.hidden_dims.push_back(2 + rng.uniform_index(5));
    }
    DistillHead head = DistillHead::initialized(config, rng.next_u64());
    for (double& p : head.params) p += rng.uniform(-0.5, 0.5);
    std::vector<double> x(config.input_dim);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    std::vector<double> teacher(config.num_classes);
    for (double& v : teacher) v = rng.uniform(-3.0, 3.0);
    const std::size_t target = rng.uniform_index(config.num_classes);

    for (double alpha : {0.0, 0.5, 1.0}) {
      for (double tau : {1.0, 2.0, 4.0}) {
        const auto analytic =
            loss_gradients(head, x, teacher, target, alpha, tau);
        std::vector<double> params = head.params;
        for (std::size_t i = 0; i < params.size(); ++i) {
          const double saved = params[i];
          params[i] = saved + step;
          const double up =
              naive_total_loss(config, params, x, teacher, target, alpha, tau);
          params[i] = saved - step;
          const double down =
              naive_total_loss(config, params, x, teacher, target, alpha, tau);
          params[i] = saved;
          const double fd = (up - down) / (2.0 * step);
          const double rel =
              std::abs(analytic[i] - fd) /
              std::max({std::abs(analytic[i]), std::abs(fd), 1.0});
          worst = std::max(worst, rel);
        }
      }
    }
    ++heads_checked;
  }
  c.require(heads_checked >= 20, "fewer than 20 heads checked");
  c.require(worst < 1e-4,
            "max relative gradient error " + format_double(worst));
  return c;
}

// ---------------------------------------------------------------------
// 4. distillation behavior on the seeded synthetic set
Check criterion_4() {
  Check c;
  SyntheticSpec spec;
  spec.n = 2000;
  spec.num_classes = 8;
  spec.feature_dim = 32;
  spec.teacher_accuracy = 1.0;
  spec.vlm_accuracy = 1.0;
  spec.overlap = 1.0;
  spec.confidence_correct = 0.75;
  spec.seed = 2024;
  const SyntheticBundle bundle = generate_synthetic(spec);
  SplitSpec split;
  split.seed = 2024;
  const auto parts = split_positions(spec.n, split);
  auto subset = [&](const std::vector<std::size_t>& positions) {
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    for (std::size_t p : positions) {
      ids.push_back(bundle.sample_ids[p]);
      labels.push_back(bundle.truth_labels[p]);
    }
    return build_distill_dataset(ids, labels, bundle.features, bundle.teacher,
                                 bundle.space);
  };
  const DistillDataset train = subset(parts[0]);
  const DistillDataset val = subset(parts[1]);
  const DistillHeadConfig config{32, {64}, 8};

  DistillHyperparams hp;
  hp.seed = 2024;

  hp.alpha = 1.0;
  const DistillTrainResult pure_kd = train_distill_head(train, val, config, hp);
  const double agreement = head_teacher_agreement(pure_kd.head, train);
  c.require(agreement >= 0.95,
            "alpha=1 teacher agreement " + format_double(agreement));

  hp.alpha = 0.0;
  const DistillTrainResult pure_ce = train_distill_head(train, val, config, hp);
  const double train_acc = head_accuracy(pure_ce.head, train);
  c.require(train_acc >= 0.99,
            "alpha=0 train accuracy " + format_double(train_acc));

  hp.alpha = 0.1;
  const double kd_low =
      train_distill_head(train, val, config, hp).history.epochs.back().l_kd;
  hp.alpha = 0.9;
  const double kd_high =
      train_distill_head(train, val, config, hp).history.epochs.back().l_kd;
  c.require(kd_high <= kd_low, "final L_KD(0.9)=" + format_double(kd_high) +
                                   " > L_KD(0.1)=" + format_double(kd_low));
  return c;
}

// ---------------------------------------------------------------------
// 5. gate fusion headroom on complementary predictors
Check criterion_5() {
  Check c;
  double gate_mean = 0.0;
  double best_mean = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.n = 3000;
    spec.num_classes = 8;
    spec.feature_dim = 16;
    spec.teacher_accuracy = 0.70;
    spec.vlm_accuracy = 0.70;
    spec.overlap = 0.50;
    spec.confidence_correct = 0.9;  // v2 is confident when correct
    spec.confidence_wrong = 0.4;
    spec.seed = seed;
    const SyntheticBundle bundle = generate_synthetic(spec);
    SplitSpec split;
    split.seed = seed;
    const auto parts = split_positions(spec.n, split);
    auto examples = [&](const std::vector<std::size_t>& positions) {
      std::vector<GateTrainingExample> out;
      for (std::size_t p : positions) {
        GateTrainingExample ex;
        ex.v1 = bundle.vlm[p].parsed->to_prob();
        ex.v2 = ProbVector{bundle.space,
                           softmax_raw(bundle.teacher[p].logits, 1.0)};
        ex.target_index = bundle.truth_indexes[p];
        out.push_back(std::move(ex));
      }
      return out;
    };
    const auto train = examples(parts[0]);
    const auto val = examples(parts[1]);
    const auto test = examples(parts[2]);

    GateHyperparams hp;
    hp.seed = seed;
    const GateTrainResult result =
        train_gate(train, val, {GateVariant::concat_linear, 8, 2}, hp);
    const double gate_acc = gate_accuracy(result.params, test);

    std::size_t v1_correct = 0;
    std::size_t v2_correct = 0;
    std::vector<std::string> pa;
    std::vector<std::string> pb;
    std::vector<std::string> truth;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (argmax_index(test[i].v1.values) == test[i].target_index) ++v1_correct;
      if (argmax_index(test[i].v2.values) == test[i].target_index) ++v2_correct;
      const std::size_t p = parts[2][i];
      pa.push_back(bundle.space->labels[argmax_index(bundle.teacher[p].logits)]);
      pb.push_back(bundle.vlm[p].parsed->label());
      truth.push_back(bundle.truth_labels[p]);
    }
    const double v1_acc = double(v1_correct) / double(test.size());
    const double v2_acc = double(v2_correct) / double(test.size());
    const double oracle = oracle_upper_bound(complementarity(pa, pb, truth));
    c.require(gate_acc <= oracle + 1e-12,
              "gate exceeded the oracle bound on seed " + std::to_string(seed));
    gate_mean += gate_acc / 5.0;
    best_mean += std::max(v1_acc, v2_acc) / 5.0;

    if (seed == 1) {
      for (GateVariant variant : all_gate_variants()) {
        try {
          const GateTrainResult run =
              train_gate(train, val, {variant, 8, 2}, hp);
          const double acc = gate_accuracy(run.params, test);
          c.require(std::isfinite(acc) && acc >= 0.0 && acc <= 1.0,
                    to_string(variant) + " produced a bad accuracy");
        } catch (const Error& e) {
          c.require(false, to_string(variant) + " failed to train: " + e.what());
        }
      }
    }
  }
  c.require(gate_mean >= best_mean - 0.02,
            "gate mean " + format_double(gate_mean) + " < best standalone " +
                format_double(best_mean) + " - 0.02");
  return c;
}

// ---------------------------------------------------------------------
// 6. complementarity algebra
Check criterion_6() {
  Check c;
  Rng rng(616);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    std::vector<std::string> truth(n);
    std::vector<std::string> pa(n);
    std::vector<std::string> pb(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = alphabet[rng.uniform_index(alphabet.size())];
      pa[i] = alphabet[rng.uniform_index(alphabet.size())];
      pb[i] = alphabet[rng.uniform_index(alphabet.size())];
    }
    const ComplementarityPartition p = complementarity(pa, pb, truth);
    c.require(p.both_count + p.a_only_count + p.b_only_count +
                      p.neither_count == n,
              "partition counts do not sum to n");
    c.require(std::abs(p.both + p.a_only + p.b_only + p.neither - 1.0) < 1e-12,
              "partition fractions do not sum to 1");
    c.require(std::abs(accuracy(pa, truth) - (p.both + p.a_only)) < 1e-12,
              "accuracy(A) != both + a_only");
    c.require(std::abs(accuracy(pb, truth) - (p.both + p.b_only)) < 1e-12,
              "accuracy(B) != both + b_only");
    c.require(oracle_upper_bound(p) >=
                  std::max(accuracy(pa, truth), accuracy(pb, truth)) - 1e-12,
              "oracle below an individual accuracy");
  }

  SyntheticSpec spec;
  spec.n = 1000;
  spec.num_classes = 8;
  spec.feature_dim = 8;
  spec.teacher_accuracy = 0.7;
  spec.vlm_accuracy = 0.7;
  spec.overlap = 0.5;
  spec.seed = 66;
  const SyntheticBundle bundle = generate_synthetic(spec);
  const BucketCounts planted = synthetic_buckets(spec);
  std::vector<std::string> pa;
  std::vector<std::string> pb;
  for (std::size_t i = 0; i < spec.n; ++i) {
    pa.push_back(bundle.space->labels[argmax_index(bundle.teacher[i].logits)]);
    pb.push_back(bundle.vlm[i].parsed->label());
  }
  const ComplementarityPartition measured =
      complementarity(pa, pb, bundle.truth_labels);
  c.require(measured.both_count == planted.both &&
                measured.a_only_count == planted.a_only &&
                measured.b_only_count == planted.b_only &&
                measured.neither_count == planted.neither,
            "planted buckets not recovered exactly");
  return c;
}

// ---------------------------------------------------------------------
// 7. template and parsing fidelity
Check criterion_7() {
  Check c;
  c.require(render_categorical_question(*mikels8()) ==
                "Observe the image and select the emotion category that best "
                "matches this image from the following 8 categories: "
                "amusement, anger, awe, contentment, disgust, excitement, "
                "fear, and sadness. Answer in dictionary form as follows: "
                "{'emotion':'amusement'}",
            "8-class categorical prompt is not byte-exact");
  for (const auto& space : {mikels8(), ekman6(), binary_space()}) {
    for (const std::string& label : space->labels) {
      const SampleEntry sample{label + "/x.jpg", "", label};
      const InstructionTriplet t = build_categorical_triplet(sample, space);
      c.require(parse_vlm_response(t.response, space) == label,
                "round trip failed for '" + label + "'");
    }
  }
  bool threw = false;
  try {
    parse_vlm_response("{'emotion': 'joy'}", mikels8());
  } catch (const OutOfVocabulary&) {
    threw = true;
  }
  c.require(threw, "'joy' under the 8-class space did not throw OutOfVocabulary");
  return c;
}

// ---------------------------------------------------------------------
// 8. pipeline determinism
Check criterion_8() {
  Check c;
  const std::filesystem::path tmp =
      std::filesystem::temp_directory_path() / "emokd_acceptance_runs";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);

  nlohmann::json config_json = {
      {"seed", 88},
      {"out", tmp.string()},
      {"synthetic",
       {{"n", 500},
        {"num_classes", 8},
        {"feature_dim", 16},
        {"teacher_accuracy", 0.8},
        {"vlm_accuracy", 0.75},
        {"overlap", 0.6}}},
      {"head", {{"hidden_dims", {16}}}},
      {"distill", {{"max_epochs", 10}, {"patience", 10}}},
      {"gate", {{"max_epochs", 10}, {"patience", 10}, {"batch_size", 32}}},
  };
  const std::string config_text = config_json.dump();

  auto run_all = [&](bool check_freeze) {
    // the stage commands narrate to stdout; keep the criterion output clean
    std::ostringstream sink;
    auto* saved = std::cout.rdbuf(sink.rdbuf());
    const RunConfig config = validate_config(config_text);
    const RunPaths paths = RunPaths::resolve(config);
    cmd_train_distill(config);
    const uint64_t head_before = digest_file(paths.checkpoints / "head.bin");
    cmd_train_gate(config);
    if (check_freeze) {
      c.require(digest_file(paths.checkpoints / "head.bin") == head_before,
                "stage 3 modified the stage-2 checkpoint");
    }
    cmd_evaluate(config);
    std::cout.rdbuf(saved);
    return std::tuple{read_file(paths.checkpoints / "head.bin"),
                      read_file(paths.checkpoints / "gate.bin"),
                      read_file(paths.summary / "eval_report.summary")};
  };

  const auto first = run_all(true);
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);
  const auto second = run_all(false);
  c.require(std::get<0>(first) == std::get<0>(second),
            "head payloads differ between identical runs");
  c.require(std::get<1>(first) == std::get<1>(second),
            "gate payloads differ between identical runs");
  c.require(std::get<2>(first) == std::get<2>(second),
            "summary files differ between identical runs");
  std::filesystem::remove_all(tmp);
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 parameter-count reproduction", criterion_1},
      {"2 loss-math suite", criterion_2},
      {"3 gradient correctness", criterion_3},
      {"4 distillation behavior", criterion_4},
      {"5 gate fusion headroom", criterion_5},
      {"6 complementarity algebra", criterion_6},
      {"7 template/parsing fidelity", criterion_7},
      {"8 pipeline determinism", criterion_8},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (result.ok) {
      std::printf("[PASS] criterion %s (%.2fs)\n", criterion.name, seconds);
    } else {
      std::printf("[FAIL] criterion %s (%.2fs): %s\n", criterion.name, seconds,
                  result.detail.c_str());
      ++failures;
    }
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all 8 acceptance criteria passed\n");
  return 0;
}
