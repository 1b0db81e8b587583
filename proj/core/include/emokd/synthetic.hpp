#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "emokd/label_space.hpp"
#include "emokd/records.hpp"

namespace emokd {

// Desk-scale stand-in for the real predictors: class-informative Gaussian
// features, a teacher whose per-sample correctness is planted, and a VLM
// answering in the categorical dictionary form. teacher/vlm accuracies and
// their overlap are realized as exact sample counts (floored), which lets
// the complementarity metric recover the requested partition exactly.
struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t num_classes = 8;
  std::size_t feature_dim = 32;
  double teacher_accuracy = 1.0;
  double vlm_accuracy = 1.0;
  double overlap = 1.0;  // fraction both get right
  // softmax mass placed on the chosen class in the teacher distribution
  double confidence_correct = 0.9;
  double confidence_wrong = 0.4;
  double cluster_separation = 6.0;
  uint64_t seed = 0;

  void validate() const;
};

struct BucketCounts {
  std::size_t both = 0;      // teacher and vlm correct
  std::size_t a_only = 0;    // teacher only
  std::size_t b_only = 0;    // vlm only
  std::size_t neither = 0;
};

// Exact planted counts: both = floor(overlap*n), a_only =
// floor(teacher*n) - both, b_only = floor(vlm*n) - both, rest neither.
BucketCounts synthetic_buckets(const SyntheticSpec& spec);

struct SyntheticBundle {
  LabelSpacePtr space;
  std::size_t feature_dim = 0;
  std::vector<std::string> sample_ids;
  std::vector<std::string> truth_labels;
  std::vector<std::size_t> truth_indexes;
  std::vector<FeatureRecord> features;
  std::vector<TeacherRecord> teacher;
  std::vector<VlmPrediction> vlm;
};

SyntheticBundle generate_synthetic(const SyntheticSpec& spec);

}  // namespace emokd
