#include <cmath>

#include "doctest.h"

#include "emokd/errors.hpp"
#include "emokd/label_space.hpp"
#include "emokd/metrics.hpp"
#include "emokd/synthetic.hpp"

using namespace emokd;

namespace {

SyntheticSpec complementary_spec(uint64_t seed) {
  SyntheticSpec spec;
  spec.n = 100;
  spec.num_classes = 8;
  spec.feature_dim = 16;
  spec.teacher_accuracy = 0.7;
  spec.vlm_accuracy = 0.7;
  spec.overlap = 0.5;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("synthetic");

TEST_CASE("bucket counts follow the floor arithmetic") {
  const BucketCounts b = synthetic_buckets(complementary_spec(1));
  CHECK(b.both == 50);
  CHECK(b.a_only == 20);
  CHECK(b.b_only == 20);
  CHECK(b.neither == 10);
}

TEST_CASE("infeasible specs are rejected") {
  SyntheticSpec spec = complementary_spec(1);
  spec.overlap = 0.8;  // exceeds min(teacher, vlm) = 0.7
  CHECK_THROWS_AS(synthetic_buckets(spec), InfeasibleSpec);

  spec = complementary_spec(1);
  spec.teacher_accuracy = 0.9;
  spec.vlm_accuracy = 0.9;
  spec.overlap = 0.5;  // neither would be negative
  CHECK_THROWS_AS(spec.validate(), InfeasibleSpec);

  spec = complementary_spec(1);
  spec.teacher_accuracy = 0.0;
  CHECK_THROWS_AS(spec.validate(), InfeasibleSpec);

  spec = complementary_spec(1);
  spec.confidence_correct = 1.0;
  CHECK_THROWS_AS(spec.validate(), InfeasibleSpec);
}

TEST_CASE("generation is deterministic in the seed") {
  const SyntheticBundle a = generate_synthetic(complementary_spec(33));
  const SyntheticBundle b = generate_synthetic(complementary_spec(33));
  CHECK(a.sample_ids == b.sample_ids);
  CHECK(a.truth_labels == b.truth_labels);
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    CHECK(a.features[i].vector == b.features[i].vector);  // bitwise
    CHECK(a.teacher[i].logits == b.teacher[i].logits);
    CHECK(a.vlm[i].raw_text == b.vlm[i].raw_text);
  }
  const SyntheticBundle c = generate_synthetic(complementary_spec(34));
  CHECK(a.truth_labels != c.truth_labels);
}

TEST_CASE("the complementarity metric recovers the planted buckets exactly") {
  const SyntheticSpec spec = complementary_spec(7);
  const SyntheticBundle bundle = generate_synthetic(spec);
  const BucketCounts planted = synthetic_buckets(spec);

  std::vector<std::string> teacher_preds;
  std::vector<std::string> vlm_preds;
  for (std::size_t i = 0; i < spec.n; ++i) {
    teacher_preds.push_back(
        bundle.space->labels[argmax_index(bundle.teacher[i].logits)]);
    REQUIRE(bundle.vlm[i].parsed.has_value());
    vlm_preds.push_back(bundle.vlm[i].parsed->label());
  }
  const ComplementarityPartition measured =
      complementarity(teacher_preds, vlm_preds, bundle.truth_labels);
  CHECK(measured.both_count == planted.both);
  CHECK(measured.a_only_count == planted.a_only);
  CHECK(measured.b_only_count == planted.b_only);
  CHECK(measured.neither_count == planted.neither);
}

TEST_CASE("teacher confidence mass lands on the chosen class") {
  const SyntheticSpec spec = complementary_spec(5);
  const SyntheticBundle bundle = generate_synthetic(spec);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto p = softmax_raw(bundle.teacher[i].logits, 1.0);
    const std::size_t choice = argmax_index(p);
    const bool correct = bundle.space->labels[choice] == bundle.truth_labels[i];
    const double expected = correct ? spec.confidence_correct
                                    : spec.confidence_wrong;
    CHECK(p[choice] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("vlm answers use the categorical dictionary form") {
  const SyntheticBundle bundle = generate_synthetic(complementary_spec(9));
  for (const VlmPrediction& pred : bundle.vlm) {
    CHECK(pred.raw_text.rfind("{'emotion': '", 0) == 0);
    CHECK(parse_vlm_response(pred.raw_text, bundle.space) ==
          pred.parsed->label());
  }
}

TEST_CASE("features cluster around the true class mean") {
  SyntheticSpec spec = complementary_spec(3);
  spec.n = 400;
  const SyntheticBundle bundle = generate_synthetic(spec);
  // nearest-centroid on the planted axis-aligned means classifies nearly
  // everything correctly at separation 6
  std::size_t correct = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::size_t best = 0;
    double best_dist = HUGE_VAL;
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
      double dist = 0.0;
      for (std::size_t d = 0; d < spec.feature_dim; ++d) {
        const double mean = k == d ? spec.cluster_separation : 0.0;
        const double diff = bundle.features[i].vector[d] - mean;
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    if (bundle.space->labels[best] == bundle.truth_labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(spec.n) > 0.99);
}

TEST_SUITE_END();
