#include "emokd/metrics.hpp"

#include "emokd/errors.hpp"

namespace emokd {

double accuracy(std::span<const std::string> predicted,
                std::span<const std::string> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("prediction/truth length mismatch");
  }
  if (predicted.empty()) throw EmptyDataset("accuracy of zero samples");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

ComplementarityPartition complementarity(std::span<const std::string> preds_a,
                                         std::span<const std::string> preds_b,
                                         std::span<const std::string> truth) {
  if (preds_a.size() != truth.size() || preds_b.size() != truth.size()) {
    throw ShapeError("prediction/truth length mismatch");
  }
  if (truth.empty()) throw EmptyDataset("complementarity of zero samples");
  ComplementarityPartition p;
  p.n = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool a = preds_a[i] == truth[i];
    const bool b = preds_b[i] == truth[i];
    if (a && b) ++p.both_count;
    else if (a) ++p.a_only_count;
    else if (b) ++p.b_only_count;
    else ++p.neither_count;
  }
  const double inv = 1.0 / static_cast<double>(p.n);
  p.both = static_cast<double>(p.both_count) * inv;
  p.a_only = static_cast<double>(p.a_only_count) * inv;
  p.b_only = static_cast<double>(p.b_only_count) * inv;
  p.neither = static_cast<double>(p.neither_count) * inv;
  return p;
}

double oracle_upper_bound(const ComplementarityPartition& partition) {
  return partition.both + partition.a_only + partition.b_only;
}

}  // namespace emokd
