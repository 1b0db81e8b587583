#include <filesystem>

#include "doctest.h"

#include "emokd/dataset.hpp"
#include "emokd/errors.hpp"
#include "emokd/report.hpp"
#include "emokd/sweeps.hpp"
#include "emokd/synthetic.hpp"
#include "emokd/util.hpp"

using namespace emokd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("emokd_sweep_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct StageFixture {
  SyntheticBundle bundle;
  DistillDataset train;
  DistillDataset val;
  std::vector<GateTrainingExample> gate_train;
  std::vector<GateTrainingExample> gate_val;
  std::vector<GateTrainingExample> gate_test;
};

StageFixture make_fixture(uint64_t seed, bool complementary) {
  SyntheticSpec spec;
  spec.n = 600;
  spec.num_classes = 8;
  spec.feature_dim = 16;
  if (complementary) {
    spec.teacher_accuracy = 0.7;
    spec.vlm_accuracy = 0.7;
    spec.overlap = 0.5;
  } else {
    spec.confidence_correct = 0.75;
  }
  spec.seed = seed;

  StageFixture f;
  f.bundle = generate_synthetic(spec);
  SplitSpec split;
  split.seed = seed;
  const auto parts = split_positions(spec.n, split);
  auto subset = [&](const std::vector<std::size_t>& positions) {
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    for (std::size_t p : positions) {
      ids.push_back(f.bundle.sample_ids[p]);
      labels.push_back(f.bundle.truth_labels[p]);
    }
    return build_distill_dataset(ids, labels, f.bundle.features,
                                 f.bundle.teacher, f.bundle.space);
  };
  f.train = subset(parts[0]);
  f.val = subset(parts[1]);
  auto gate_subset = [&](const std::vector<std::size_t>& positions) {
    std::vector<GateTrainingExample> out;
    for (std::size_t p : positions) {
      GateTrainingExample ex;
      ex.v1 = f.bundle.vlm[p].parsed->to_prob();
      ex.v2 = ProbVector{f.bundle.space,
                         softmax_raw(f.bundle.teacher[p].logits, 1.0)};
      ex.target_index = f.bundle.truth_indexes[p];
      out.push_back(std::move(ex));
    }
    return out;
  };
  f.gate_train = gate_subset(parts[0]);
  f.gate_val = gate_subset(parts[1]);
  f.gate_test = gate_subset(parts[2]);
  return f;
}

DistillHyperparams quick_hyper(uint64_t seed) {
  DistillHyperparams hp;
  hp.seed = seed;
  hp.max_epochs = 6;
  hp.patience = 6;
  return hp;
}

}  // namespace

TEST_SUITE_BEGIN("sweeps_report");

TEST_CASE("default grids match the published spans") {
  const auto alpha = default_alpha_grid();
  REQUIRE(alpha.size() == 9);
  CHECK(alpha.front() == doctest::Approx(0.1));
  CHECK(alpha.back() == doctest::Approx(0.9));

  const auto depth = default_depth_grid();
  REQUIRE(depth.size() == 5);
  CHECK(depth.front() == std::vector<std::size_t>{1024});
  CHECK(depth.back() == std::vector<std::size_t>{1024, 512, 256, 128, 64});
}

TEST_CASE("alpha sweep emits one record per grid point with the KD trend") {
  StageFixture f = make_fixture(41, /*complementary=*/false);
  DistillHeadConfig config{16, {32}, 8};
  DistillHyperparams hp = quick_hyper(41);
  hp.max_epochs = 20;  // the KD trend needs converged endpoints
  hp.patience = 20;
  const SweepResult sweep =
      run_alpha_sweep(default_alpha_grid(), f.train, f.val, config, hp, 41);
  REQUIRE(sweep.points.size() == 9);
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    CHECK(sweep.points[i - 1].x < sweep.points[i].x);
  }
  REQUIRE(sweep.points.front().final_l_kd.has_value());
  // Figure-3 trend: more KD weight, lower final KD loss
  CHECK(*sweep.points.back().final_l_kd <= *sweep.points.front().final_l_kd);

  // a singleton grid equals a direct training call
  const SweepResult single =
      run_alpha_sweep({0.5}, f.train, f.val, config, quick_hyper(41), 41);
  REQUIRE(single.points.size() == 1);
  DistillHyperparams direct_hp = quick_hyper(41);
  direct_hp.alpha = 0.5;
  direct_hp.seed = 41;
  const DistillTrainResult direct =
      train_distill_head(f.train, f.val, config, direct_hp);
  double best = 0.0;
  for (const EpochRecord& r : direct.history.epochs) {
    best = std::max(best, r.val_accuracy);
  }
  CHECK(single.points[0].accuracy == best);
  CHECK(*single.points[0].final_l_kd == direct.history.epochs.back().l_kd);

  CHECK_THROWS_AS(
      run_alpha_sweep({}, f.train, f.val, config, quick_hyper(41), 41),
      InvalidGrid);
  CHECK_THROWS_AS(
      run_alpha_sweep({1.5}, f.train, f.val, config, quick_hyper(41), 41),
      InvalidGrid);
}

TEST_CASE("depth sweep reports param counts alongside accuracy") {
  StageFixture f = make_fixture(42, /*complementary=*/false);
  const std::vector<std::vector<std::size_t>> grid = {{8}, {8, 4}};
  const SweepResult sweep =
      run_depth_sweep(grid, f.train, f.val, 16, quick_hyper(42), 42);
  REQUIRE(sweep.points.size() == 2);
  CHECK(sweep.points[0].label == "[8]");
  CHECK(sweep.points[1].label == "[8, 4]");
  CHECK(*sweep.points[0].param_count == 16 * 8 + 8 + 8 * 8 + 8);
  CHECK(*sweep.points[1].param_count == 16 * 8 + 8 + 8 * 4 + 4 + 4 * 8 + 8);

  // the default grid's parameter counts are strictly increasing
  std::size_t previous = 0;
  for (const auto& dims : default_depth_grid()) {
    DistillHeadConfig config{3584, dims, 8};
    CHECK(param_count(config) > previous);
    previous = param_count(config);
  }

  CHECK_THROWS_AS(run_depth_sweep({}, f.train, f.val, 16, quick_hyper(42), 42),
                  InvalidGrid);
}

TEST_CASE("gate sweep trains every requested variant on the same data") {
  StageFixture f = make_fixture(43, /*complementary=*/true);
  GateHyperparams hp;
  hp.seed = 43;
  hp.max_epochs = 10;
  const SweepResult sweep =
      run_gate_sweep(all_gate_variants(), f.gate_train, f.gate_val, f.gate_test,
                     8, 2, hp, 43);
  REQUIRE(sweep.points.size() == 5);
  CHECK(sweep.points[0].label == "concat_linear");
  CHECK(*sweep.points[0].param_count == 136);
  for (const SweepPoint& p : sweep.points) {
    CHECK(p.accuracy >= 0.0);
    CHECK(p.accuracy <= 1.0);
  }
  CHECK_THROWS_AS(run_gate_sweep({}, f.gate_train, f.gate_val, f.gate_test, 8,
                                 2, hp, 43),
                  InvalidGrid);
}

TEST_CASE("reports land as summary/table/plot with deterministic bytes") {
  StageFixture f = make_fixture(44, /*complementary=*/false);
  DistillHeadConfig config{16, {}, 8};
  const SweepResult sweep =
      run_alpha_sweep({0.25, 0.75}, f.train, f.val, config, quick_hyper(44), 44);

  TempDir tmp;
  emit_sweep_report(sweep, R"({"note":"cfg"})", tmp.path);
  const fs::path summary = tmp.path / "summary" / "alpha_sweep.summary";
  const fs::path table = tmp.path / "tables" / "alpha_sweep.table";
  const fs::path plot = tmp.path / "plots" / "alpha_sweep.plot";
  REQUIRE(fs::exists(summary));
  REQUIRE(fs::exists(table));
  REQUIRE(fs::exists(plot));

  const std::string summary_bytes = read_file(summary);
  const std::string table_bytes = read_file(table);
  const std::string plot_bytes = read_file(plot);
  CHECK(summary_bytes.find("\"note\": \"cfg\"") != std::string::npos);
  CHECK(table_bytes.rfind("label\tx\taccuracy\tfinal_l_kd\n", 0) == 0);
  CHECK(plot_bytes.rfind("<svg", 0) == 0);

  // re-emission from identical inputs is byte-identical
  emit_sweep_report(sweep, R"({"note":"cfg"})", tmp.path);
  CHECK(read_file(summary) == summary_bytes);
  CHECK(read_file(table) == table_bytes);
  CHECK(read_file(plot) == plot_bytes);
}

TEST_CASE("an unwritable output directory surfaces an IO error with the path") {
  TempDir tmp;
  // a file where a directory component is required
  atomic_write_file(tmp.path / "blocked", "x");
  ComplementarityPartition partition;
  partition.n = 1;
  partition.both = 1.0;
  partition.both_count = 1;
  try {
    emit_complementarity_report(partition, "fi", "{}", tmp.path / "blocked");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("blocked") != std::string::npos);
  }
}

TEST_CASE("complementarity and eval reports write their three files") {
  TempDir tmp;
  ComplementarityPartition partition;
  partition.n = 4;
  partition.both = 0.25;
  partition.a_only = 0.25;
  partition.b_only = 0.25;
  partition.neither = 0.25;
  partition.both_count = partition.a_only_count = partition.b_only_count =
      partition.neither_count = 1;
  emit_complementarity_report(partition, "fi", "{}", tmp.path);
  CHECK(fs::exists(tmp.path / "summary" / "complementarity.summary"));
  CHECK(fs::exists(tmp.path / "tables" / "complementarity.table"));
  CHECK(fs::exists(tmp.path / "plots" / "complementarity.plot"));
  CHECK(read_file(tmp.path / "summary" / "complementarity.summary")
            .find("\"oracle_upper_bound\": 0.75") != std::string::npos);

  EvalReport report;
  report.dataset = "fi";
  report.accuracies = {{"fused", 0.9}, {"student", 0.7}, {"vlm", 0.71}};
  report.partition = partition;
  report.parameter_counts = {{"head", 3679240}, {"gate", 136}};
  report.trace.push_back({"s1", "awe", "fear", "awe", "awe"});
  emit_eval_report(report, "{}", tmp.path);
  CHECK(fs::exists(tmp.path / "summary" / "eval_report.summary"));
  const std::string trace = read_file(tmp.path / "tables" / "eval_report.table");
  CHECK(trace.rfind("sample_id\tv1_label\tv2_label\tfused_label\ttruth\n", 0) ==
        0);
  CHECK(trace.find("s1\tawe\tfear\tawe\tawe") != std::string::npos);
}

TEST_SUITE_END();
