#include "emokd/label_space.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "emokd/errors.hpp"

namespace emokd {

namespace {

bool is_lowercase(const std::string& s) {
  return std::none_of(s.begin(), s.end(), [](unsigned char c) {
    return c >= 'A' && c <= 'Z';
  });
}

}  // namespace

std::shared_ptr<const LabelSpace> LabelSpace::make(
    std::string name, std::vector<std::string> labels) {
  if (labels.size() < 2) {
    throw InvalidInput("label space '" + name + "' needs at least 2 labels");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& label : labels) {
    if (label.empty()) throw InvalidInput("empty label in space '" + name + "'");
    if (!is_lowercase(label)) {
      throw InvalidInput("label '" + label + "' is not lowercase");
    }
    if (!seen.insert(label).second) {
      throw InvalidInput("duplicate label '" + label + "' in space '" + name + "'");
    }
  }
  auto space = std::make_shared<LabelSpace>();
  space->name = std::move(name);
  space->labels = std::move(labels);
  return space;
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  return std::nullopt;
}

LabelSpacePtr mikels8() {
  static const LabelSpacePtr space = LabelSpace::make(
      "mikels8", {"amusement", "anger", "awe", "contentment", "disgust",
                  "excitement", "fear", "sadness"});
  return space;
}

LabelSpacePtr ekman6() {
  static const LabelSpacePtr space = LabelSpace::make(
      "ekman6", {"anger", "surprise", "disgust", "joy", "fear", "sadness"});
  return space;
}

LabelSpacePtr binary_space() {
  static const LabelSpacePtr space =
      LabelSpace::make("binary", {"positive", "negative"});
  return space;
}

LabelSpacePtr synthetic_space(std::size_t num_classes) {
  std::vector<std::string> labels;
  labels.reserve(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    labels.push_back("c" + std::to_string(i));
  }
  return LabelSpace::make("synthetic" + std::to_string(num_classes),
                          std::move(labels));
}

LogitVector LogitVector::make(LabelSpacePtr space, std::vector<double> values) {
  if (!space) throw InvalidInput("logit vector without a label space");
  if (values.size() != space->size()) {
    throw ShapeError("logit length " + std::to_string(values.size()) +
                     " != class count " + std::to_string(space->size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite logit");
  }
  return LogitVector{std::move(space), std::move(values)};
}

ProbVector ProbVector::make(LabelSpacePtr space, std::vector<double> values) {
  if (!space) throw InvalidInput("probability vector without a label space");
  if (values.size() != space->size()) {
    throw ShapeError("probability length " + std::to_string(values.size()) +
                     " != class count " + std::to_string(space->size()));
  }
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw InvalidInput("negative or NaN probability entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidInput("probabilities sum to " + std::to_string(sum));
  }
  return ProbVector{std::move(space), std::move(values)};
}

std::vector<double> OneHotVector::materialize() const {
  std::vector<double> v(space->size(), 0.0);
  v[hot_index] = 1.0;
  return v;
}

ProbVector OneHotVector::to_prob() const {
  return ProbVector{space, materialize()};
}

std::vector<double> softmax_raw(std::span<const double> logits, double tau) {
  if (tau <= 0.0 || !std::isfinite(tau)) {
    throw InvalidTemperature("temperature must be positive, got " +
                             std::to_string(tau));
  }
  std::vector<double> out(log_softmax_raw(logits, tau));
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> log_softmax_raw(std::span<const double> logits, double tau) {
  if (tau <= 0.0 || !std::isfinite(tau)) {
    throw InvalidTemperature("temperature must be positive, got " +
                             std::to_string(tau));
  }
  if (logits.empty()) throw ShapeError("empty logit vector");
  std::vector<double> scaled(logits.size());
  double max_scaled = -HUGE_VAL;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw InvalidInput("non-finite logit");
    scaled[i] = logits[i] / tau;
    max_scaled = std::max(max_scaled, scaled[i]);
  }
  double sum = 0.0;
  for (double v : scaled) sum += std::exp(v - max_scaled);
  const double log_sum = max_scaled + std::log(sum);
  for (double& v : scaled) v -= log_sum;
  return scaled;
}

std::size_t argmax_index(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ProbVector softened_softmax(const LogitVector& logits, double tau) {
  return ProbVector{logits.space, softmax_raw(logits.values, tau)};
}

OneHotVector one_hot(const std::string& label, const LabelSpacePtr& space) {
  if (!space) throw InvalidInput("one_hot without a label space");
  auto idx = space->index_of(label);
  if (!idx) {
    throw OutOfVocabulary("label '" + label + "' not in space '" +
                          space->name + "'");
  }
  return OneHotVector{space, *idx};
}

const std::string& argmax_label(const ProbVector& probs) {
  return probs.space->labels[argmax_index(probs.values)];
}

ProbVector uniform_prob(const LabelSpacePtr& space) {
  if (!space) throw InvalidInput("uniform_prob without a label space");
  const double p = 1.0 / static_cast<double>(space->size());
  return ProbVector{space, std::vector<double>(space->size(), p)};
}

}  // namespace emokd
