#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emokd {

// Ordered emotion taxonomy. The label order is frozen: it defines the
// class index used by every logit / probability / one-hot vector.
struct LabelSpace {
  std::string name;
  std::vector<std::string> labels;

  // Validates: >= 2 labels, unique, non-empty, lowercase.
  static std::shared_ptr<const LabelSpace> make(std::string name,
                                                std::vector<std::string> labels);

  std::size_t size() const { return labels.size(); }
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(const LabelSpace& other) const = default;
};

using LabelSpacePtr = std::shared_ptr<const LabelSpace>;

// The three taxonomies used by the benchmark datasets.
LabelSpacePtr mikels8();      // amusement .. sadness, 8 classes
LabelSpacePtr ekman6();       // anger .. sadness, 6 classes
LabelSpacePtr binary_space(); // positive, negative
LabelSpacePtr synthetic_space(std::size_t num_classes);  // c0 .. c{C-1}

struct LogitVector {
  LabelSpacePtr space;
  std::vector<double> values;

  static LogitVector make(LabelSpacePtr space, std::vector<double> values);
};

struct ProbVector {
  LabelSpacePtr space;
  std::vector<double> values;

  // Validates: entries >= 0 and summing to 1 within 1e-6.
  static ProbVector make(LabelSpacePtr space, std::vector<double> values);
};

struct OneHotVector {
  LabelSpacePtr space;
  std::size_t hot_index = 0;

  const std::string& label() const { return space->labels[hot_index]; }
  std::vector<double> materialize() const;
  ProbVector to_prob() const;
};

// --- raw kernels (no LabelSpace attached) ------------------------------

// softmax(z / tau), stabilized by subtracting the max logit.
std::vector<double> softmax_raw(std::span<const double> logits, double tau);
// log softmax(z / tau); same stabilization, never produces -inf for
// finite inputs.
std::vector<double> log_softmax_raw(std::span<const double> logits, double tau);
// Lowest index wins ties.
std::size_t argmax_index(std::span<const double> values);

// --- typed operations ----------------------------------------------------

ProbVector softened_softmax(const LogitVector& logits, double tau);
OneHotVector one_hot(const std::string& label, const LabelSpacePtr& space);
const std::string& argmax_label(const ProbVector& probs);
ProbVector uniform_prob(const LabelSpacePtr& space);

}  // namespace emokd
