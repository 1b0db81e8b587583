#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emokd/label_space.hpp"

namespace emokd {

// The student: a stack of affine layers over frozen d-dimensional
// features, ReLU between hidden layers, no activation after the last.
struct DistillHeadConfig {
  std::size_t input_dim = 3584;
  std::vector<std::size_t> hidden_dims;  // possibly empty
  std::size_t num_classes = 8;

  void validate() const;
  // d -> hidden... -> C
  std::vector<std::size_t> dims() const;

  bool operator==(const DistillHeadConfig&) const = default;
};

// sum over consecutive dims of in*out + out
std::size_t param_count(const DistillHeadConfig& config);

// Parameters live in one flat buffer, per layer W (row-major, out x in)
// then b. The flat order is also the checkpoint payload order.
struct DistillHead {
  DistillHeadConfig config;
  std::vector<double> params;

  static DistillHead zeros(const DistillHeadConfig& config);
  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer
  static DistillHead initialized(const DistillHeadConfig& config, uint64_t seed);

  std::size_t layer_count() const { return config.dims().size() - 1; }
  std::size_t layer_offset(std::size_t layer) const;
  double* weights(std::size_t layer);
  const double* weights(std::size_t layer) const;
  double* bias(std::size_t layer);
  const double* bias(std::size_t layer) const;
};

std::vector<double> head_forward_raw(const DistillHead& head,
                                     std::span<const double> features);
LogitVector head_forward(std::span<const double> features,
                         const DistillHead& head, const LabelSpacePtr& space);

// softmax(head(x), tau=1): inference never softens
ProbVector student_distribution(std::span<const double> features,
                                const DistillHead& head,
                                const LabelSpacePtr& space);

// tau^2 * KL(teacher^tau || student^tau), computed in log space.
double kd_loss(std::span<const double> student_logits,
               std::span<const double> teacher_logits, double tau);
double kd_loss(const LogitVector& student, const LogitVector& teacher,
               double tau);

// -log p_s(true class) at tau=1
double ce_loss(std::span<const double> student_logits, std::size_t target_index);
double ce_loss(const LogitVector& student, const OneHotVector& target);

// alpha * kd + (1 - alpha) * ce
double total_loss(double l_kd, double l_ce, double alpha);

struct DistillHyperparams {
  double alpha = 0.5;
  double tau = 2.0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;  // early stop on val accuracy
  uint64_t seed = 0;

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double kd = 0.0;
  double ce = 0.0;
};

// Adds d L_total / d theta for one sample into grad (flat layout matching
// DistillHead::params) and returns the loss values.
LossBreakdown accumulate_loss_gradients(const DistillHead& head,
                                        std::span<const double> features,
                                        std::span<const double> teacher_logits,
                                        std::size_t target_index,
                                        double alpha, double tau,
                                        std::span<double> grad);

// Convenience wrapper computing the full gradient for one sample.
std::vector<double> loss_gradients(const DistillHead& head,
                                   std::span<const double> features,
                                   std::span<const double> teacher_logits,
                                   std::size_t target_index, double alpha,
                                   double tau);

}  // namespace emokd
