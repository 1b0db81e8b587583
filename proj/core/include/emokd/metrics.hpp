#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace emokd {

// Fraction of exact label matches.
double accuracy(std::span<const std::string> predicted,
                std::span<const std::string> truth);

// Per-sample correctness partition of two systems against ground truth.
struct ComplementarityPartition {
  double both = 0.0;
  double a_only = 0.0;
  double b_only = 0.0;
  double neither = 0.0;
  std::size_t n = 0;
  std::size_t both_count = 0;
  std::size_t a_only_count = 0;
  std::size_t b_only_count = 0;
  std::size_t neither_count = 0;
};

ComplementarityPartition complementarity(std::span<const std::string> preds_a,
                                         std::span<const std::string> preds_b,
                                         std::span<const std::string> truth);

// Accuracy of the ideal selector that is right whenever either system is:
// both + a_only + b_only.
double oracle_upper_bound(const ComplementarityPartition& partition);

struct TraceRow {
  std::string sample_id;
  std::string v1_label;   // VLM side ("-" when unparseable)
  std::string v2_label;   // student side
  std::string fused_label;
  std::string truth;
};

struct EvalReport {
  std::string dataset;
  std::map<std::string, double> accuracies;  // system name -> accuracy
  ComplementarityPartition partition;        // student (a) vs VLM (b)
  std::map<std::string, std::size_t> parameter_counts;
  std::vector<TraceRow> trace;
};

}  // namespace emokd
