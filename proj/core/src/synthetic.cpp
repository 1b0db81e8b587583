#include "emokd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "emokd/errors.hpp"
#include "emokd/instructions.hpp"
#include "emokd/rng.hpp"

namespace emokd {

void SyntheticSpec::validate() const {
  if (n == 0) throw InfeasibleSpec("n must be positive");
  if (num_classes < 2) throw InfeasibleSpec("need at least 2 classes");
  if (feature_dim == 0) throw InfeasibleSpec("feature_dim must be positive");
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(teacher_accuracy) || !in_unit(vlm_accuracy)) {
    throw InfeasibleSpec("accuracies must lie in (0, 1]");
  }
  if (overlap < 0.0 || overlap > 1.0) {
    throw InfeasibleSpec("overlap must lie in [0, 1]");
  }
  if (overlap > std::min(teacher_accuracy, vlm_accuracy) + 1e-12) {
    throw InfeasibleSpec("overlap exceeds min(teacher, vlm) accuracy");
  }
  if (teacher_accuracy + vlm_accuracy - overlap > 1.0 + 1e-12) {
    throw InfeasibleSpec("bucket fractions exceed 1 (neither would be negative)");
  }
  if (!(confidence_correct > 0.0) || !(confidence_correct < 1.0) ||
      !(confidence_wrong > 0.0) || !(confidence_wrong < 1.0)) {
    throw InfeasibleSpec("confidences must lie in (0, 1)");
  }
}

BucketCounts synthetic_buckets(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<double>(spec.n);
  BucketCounts b;
  b.both = static_cast<std::size_t>(std::floor(spec.overlap * n));
  const auto teacher_total =
      static_cast<std::size_t>(std::floor(spec.teacher_accuracy * n));
  const auto vlm_total =
      static_cast<std::size_t>(std::floor(spec.vlm_accuracy * n));
  if (teacher_total < b.both || vlm_total < b.both) {
    throw InfeasibleSpec("overlap count exceeds a per-system correct count");
  }
  b.a_only = teacher_total - b.both;
  b.b_only = vlm_total - b.both;
  const std::size_t used = b.both + b.a_only + b.b_only;
  if (used > spec.n) throw InfeasibleSpec("bucket counts exceed n");
  b.neither = spec.n - used;
  return b;
}

namespace {

// Logits whose softmax puts `mass` on `choice` and spreads the rest
// uniformly.
std::vector<double> logits_for_choice(std::size_t num_classes,
                                      std::size_t choice, double mass) {
  const double rest = (1.0 - mass) / static_cast<double>(num_classes - 1);
  std::vector<double> logits(num_classes, std::log(rest));
  logits[choice] = std::log(mass);
  return logits;
}

std::size_t random_wrong_class(Rng& rng, std::size_t num_classes,
                               std::size_t truth) {
  const std::size_t offset = 1 + rng.uniform_index(num_classes - 1);
  return (truth + offset) % num_classes;
}

}  // namespace

SyntheticBundle generate_synthetic(const SyntheticSpec& spec) {
  const BucketCounts buckets = synthetic_buckets(spec);

  SyntheticBundle bundle;
  bundle.space = synthetic_space(spec.num_classes);
  bundle.feature_dim = spec.feature_dim;

  Rng truth_rng = Rng(spec.seed).child(1);
  Rng bucket_rng = Rng(spec.seed).child(2);
  Rng teacher_rng = Rng(spec.seed).child(3);
  Rng vlm_rng = Rng(spec.seed).child(4);
  Rng feature_rng = Rng(spec.seed).child(5);

  // Cluster means: axis-aligned when they fit, random directions otherwise.
  std::vector<std::vector<double>> means(
      spec.num_classes, std::vector<double>(spec.feature_dim, 0.0));
  Rng mean_rng = Rng(spec.seed).child(6);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    if (spec.num_classes <= spec.feature_dim) {
      means[k][k] = spec.cluster_separation;
    } else {
      double norm2 = 0.0;
      for (double& v : means[k]) {
        v = mean_rng.normal();
        norm2 += v * v;
      }
      const double scale = spec.cluster_separation / std::sqrt(norm2);
      for (double& v : means[k]) v *= scale;
    }
  }

  // Planted correctness: a seed-keyed permutation carved into the four
  // buckets (both, teacher-only, vlm-only, neither), in that order.
  std::vector<std::size_t> order(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) order[i] = i;
  bucket_rng.shuffle(order);
  std::vector<bool> teacher_correct(spec.n, false);
  std::vector<bool> vlm_correct(spec.n, false);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < buckets.both; ++i, ++cursor) {
    teacher_correct[order[cursor]] = true;
    vlm_correct[order[cursor]] = true;
  }
  for (std::size_t i = 0; i < buckets.a_only; ++i, ++cursor) {
    teacher_correct[order[cursor]] = true;
  }
  for (std::size_t i = 0; i < buckets.b_only; ++i, ++cursor) {
    vlm_correct[order[cursor]] = true;
  }

  const int id_width = static_cast<int>(std::to_string(spec.n).size());
  bundle.sample_ids.reserve(spec.n);
  bundle.truth_labels.reserve(spec.n);
  bundle.features.reserve(spec.n);
  bundle.teacher.reserve(spec.n);
  bundle.vlm.reserve(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "s%0*zu", id_width, i);
    bundle.sample_ids.emplace_back(id_buf);

    const std::size_t truth = truth_rng.uniform_index(spec.num_classes);
    bundle.truth_indexes.push_back(truth);
    bundle.truth_labels.push_back(bundle.space->labels[truth]);

    FeatureRecord feat;
    feat.sample_id = bundle.sample_ids.back();
    feat.vector.resize(spec.feature_dim);
    for (std::size_t d = 0; d < spec.feature_dim; ++d) {
      feat.vector[d] = means[truth][d] + feature_rng.normal();
    }
    bundle.features.push_back(std::move(feat));

    const std::size_t teacher_choice =
        teacher_correct[i] ? truth
                           : random_wrong_class(teacher_rng, spec.num_classes,
                                                truth);
    const double teacher_mass =
        teacher_correct[i] ? spec.confidence_correct : spec.confidence_wrong;
    bundle.teacher.push_back(
        {bundle.sample_ids.back(),
         logits_for_choice(spec.num_classes, teacher_choice, teacher_mass)});

    const std::size_t vlm_choice =
        vlm_correct[i] ? truth
                       : random_wrong_class(vlm_rng, spec.num_classes, truth);
    VlmPrediction pred;
    pred.sample_id = bundle.sample_ids.back();
    pred.raw_text = categorical_response(bundle.space->labels[vlm_choice]);
    pred.parsed = OneHotVector{bundle.space, vlm_choice};
    bundle.vlm.push_back(std::move(pred));
  }

  return bundle;
}

}  // namespace emokd
