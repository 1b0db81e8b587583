#include "emokd/distill.hpp"

#include <cmath>

#include "emokd/errors.hpp"
#include "emokd/rng.hpp"

namespace emokd {

void DistillHeadConfig::validate() const {
  if (input_dim < 1) throw ConfigError("head input_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("head num_classes must be >= 2");
  for (std::size_t h : hidden_dims) {
    if (h < 1) throw ConfigError("hidden dims must be >= 1");
  }
}

std::vector<std::size_t> DistillHeadConfig::dims() const {
  std::vector<std::size_t> d;
  d.reserve(hidden_dims.size() + 2);
  d.push_back(input_dim);
  d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
  d.push_back(num_classes);
  return d;
}

std::size_t param_count(const DistillHeadConfig& config) {
  config.validate();
  const auto dims = config.dims();
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    count += dims[i] * dims[i + 1] + dims[i + 1];
  }
  return count;
}

DistillHead DistillHead::zeros(const DistillHeadConfig& config) {
  DistillHead head;
  head.config = config;
  head.params.assign(param_count(config), 0.0);
  return head;
}

DistillHead DistillHead::initialized(const DistillHeadConfig& config,
                                     uint64_t seed) {
  DistillHead head = zeros(config);
  const auto dims = config.dims();
  Rng rng = Rng(seed).child(0x11ead);
  std::size_t offset = 0;
  for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[layer]));
    const std::size_t block = dims[layer] * dims[layer + 1] + dims[layer + 1];
    for (std::size_t i = 0; i < block; ++i) {
      head.params[offset + i] = rng.uniform(-bound, bound);
    }
    offset += block;
  }
  return head;
}

std::size_t DistillHead::layer_offset(std::size_t layer) const {
  const auto dims = config.dims();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    offset += dims[l] * dims[l + 1] + dims[l + 1];
  }
  return offset;
}

double* DistillHead::weights(std::size_t layer) {
  return params.data() + layer_offset(layer);
}
const double* DistillHead::weights(std::size_t layer) const {
  return params.data() + layer_offset(layer);
}
double* DistillHead::bias(std::size_t layer) {
  const auto dims = config.dims();
  return params.data() + layer_offset(layer) + dims[layer] * dims[layer + 1];
}
const double* DistillHead::bias(std::size_t layer) const {
  const auto dims = config.dims();
  return params.data() + layer_offset(layer) + dims[layer] * dims[layer + 1];
}

namespace {

// y = W x + b with W row-major (out x in)
void affine(const double* w, const double* b, std::span<const double> x,
            std::size_t out_dim, std::span<double> y) {
  const std::size_t in_dim = x.size();
  for (std::size_t o = 0; o < out_dim; ++o) {
    double acc = b[o];
    const double* row = w + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

struct ForwardTrace {
  // activations[0] = input features, activations[k] = output of layer k-1
  // after its activation (ReLU for hidden layers, identity for the last)
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> pre_activations;  // per layer
};

ForwardTrace forward_trace(const DistillHead& head,
                           std::span<const double> features) {
  const auto dims = head.config.dims();
  if (features.size() != dims.front()) {
    throw ShapeError("feature length " + std::to_string(features.size()) +
                     " != head input dim " + std::to_string(dims.front()));
  }
  ForwardTrace trace;
  trace.activations.emplace_back(features.begin(), features.end());
  const std::size_t layers = dims.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> pre(dims[l + 1]);
    affine(head.weights(l), head.bias(l), trace.activations.back(), dims[l + 1],
           pre);
    std::vector<double> post = pre;
    if (l + 1 < layers) {
      for (double& v : post) v = v > 0.0 ? v : 0.0;  // ReLU on hidden layers
    }
    trace.pre_activations.push_back(std::move(pre));
    trace.activations.push_back(std::move(post));
  }
  return trace;
}

}  // namespace

std::vector<double> head_forward_raw(const DistillHead& head,
                                     std::span<const double> features) {
  return forward_trace(head, features).activations.back();
}

LogitVector head_forward(std::span<const double> features,
                         const DistillHead& head, const LabelSpacePtr& space) {
  if (space->size() != head.config.num_classes) {
    throw ShapeError("space size != head num_classes");
  }
  return LogitVector{space, head_forward_raw(head, features)};
}

ProbVector student_distribution(std::span<const double> features,
                                const DistillHead& head,
                                const LabelSpacePtr& space) {
  if (space->size() != head.config.num_classes) {
    throw ShapeError("space size != head num_classes");
  }
  return ProbVector{space, softmax_raw(head_forward_raw(head, features), 1.0)};
}

double kd_loss(std::span<const double> student_logits,
               std::span<const double> teacher_logits, double tau) {
  if (student_logits.size() != teacher_logits.size()) {
    throw ShapeError("student/teacher logit length mismatch");
  }
  const auto log_pt = log_softmax_raw(teacher_logits, tau);
  const auto log_ps = log_softmax_raw(student_logits, tau);
  double kl = 0.0;
  for (std::size_t i = 0; i < log_pt.size(); ++i) {
    kl += std::exp(log_pt[i]) * (log_pt[i] - log_ps[i]);
  }
  // KL of identical softened distributions is exactly 0; tiny negative
  // rounding residue is clamped away.
  if (kl < 0.0) kl = 0.0;
  return tau * tau * kl;
}

double kd_loss(const LogitVector& student, const LogitVector& teacher,
               double tau) {
  if (student.space && teacher.space && !(*student.space == *teacher.space)) {
    throw ShapeError("student/teacher label spaces differ");
  }
  return kd_loss(std::span<const double>(student.values),
                 std::span<const double>(teacher.values), tau);
}

double ce_loss(std::span<const double> student_logits,
               std::size_t target_index) {
  if (target_index >= student_logits.size()) {
    throw ShapeError("target index out of range");
  }
  const auto log_ps = log_softmax_raw(student_logits, 1.0);
  return -log_ps[target_index];
}

double ce_loss(const LogitVector& student, const OneHotVector& target) {
  if (student.space && target.space && !(*student.space == *target.space)) {
    throw ShapeError("student/target label spaces differ");
  }
  return ce_loss(std::span<const double>(student.values), target.hot_index);
}

double total_loss(double l_kd, double l_ce, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidAlpha("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (!std::isfinite(l_kd) || !std::isfinite(l_ce)) {
    throw InvalidInput("non-finite loss input");
  }
  return alpha * l_kd + (1.0 - alpha) * l_ce;
}

void DistillHyperparams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidAlpha("alpha outside [0, 1]");
  if (!(tau > 0.0)) throw InvalidTemperature("tau must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
}

LossBreakdown accumulate_loss_gradients(const DistillHead& head,
                                        std::span<const double> features,
                                        std::span<const double> teacher_logits,
                                        std::size_t target_index, double alpha,
                                        double tau,
                                        std::span<double> grad) {
  if (grad.size() != head.params.size()) {
    throw ShapeError("gradient buffer size mismatch");
  }
  if (teacher_logits.size() != head.config.num_classes) {
    throw ShapeError("teacher logit length != head num_classes");
  }
  if (target_index >= head.config.num_classes) {
    throw ShapeError("target index out of range");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidAlpha("alpha outside [0, 1]");

  const ForwardTrace trace = forward_trace(head, features);
  const std::vector<double>& student_logits = trace.activations.back();

  const auto log_ps_tau = log_softmax_raw(student_logits, tau);
  const auto log_pt_tau = log_softmax_raw(teacher_logits, tau);
  const auto log_ps = log_softmax_raw(student_logits, 1.0);

  LossBreakdown loss;
  for (std::size_t i = 0; i < log_pt_tau.size(); ++i) {
    loss.kd += std::exp(log_pt_tau[i]) * (log_pt_tau[i] - log_ps_tau[i]);
  }
  if (loss.kd < 0.0) loss.kd = 0.0;
  loss.kd *= tau * tau;
  loss.ce = -log_ps[target_index];
  loss.total = alpha * loss.kd + (1.0 - alpha) * loss.ce;

  // dL/dz = alpha * tau * (ps_tau - pt_tau) + (1 - alpha) * (ps - y)
  const std::size_t C = head.config.num_classes;
  std::vector<double> delta(C);
  for (std::size_t i = 0; i < C; ++i) {
    const double kd_term = tau * (std::exp(log_ps_tau[i]) - std::exp(log_pt_tau[i]));
    const double ce_term =
        std::exp(log_ps[i]) - (i == target_index ? 1.0 : 0.0);
    delta[i] = alpha * kd_term + (1.0 - alpha) * ce_term;
  }

  // Backprop through the affine stack.
  const auto dims = head.config.dims();
  const std::size_t layers = dims.size() - 1;
  for (std::size_t l = layers; l-- > 0;) {
    const std::vector<double>& input = trace.activations[l];
    const std::size_t in_dim = dims[l];
    const std::size_t out_dim = dims[l + 1];
    double* grad_w = grad.data() + head.layer_offset(l);
    double* grad_b = grad_w + in_dim * out_dim;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double d = delta[o];
      grad_b[o] += d;
      double* row = grad_w + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) row[i] += d * input[i];
    }
    if (l == 0) break;
    const double* w = head.weights(l);
    std::vector<double> prev_delta(in_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double d = delta[o];
      const double* row = w + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) prev_delta[i] += d * row[i];
    }
    // ReLU mask of the hidden layer feeding this one
    const std::vector<double>& pre = trace.pre_activations[l - 1];
    for (std::size_t i = 0; i < in_dim; ++i) {
      if (pre[i] <= 0.0) prev_delta[i] = 0.0;
    }
    delta = std::move(prev_delta);
  }
  return loss;
}

std::vector<double> loss_gradients(const DistillHead& head,
                                   std::span<const double> features,
                                   std::span<const double> teacher_logits,
                                   std::size_t target_index, double alpha,
                                   double tau) {
  std::vector<double> grad(head.params.size(), 0.0);
  accumulate_loss_gradients(head, features, teacher_logits, target_index, alpha,
                            tau, grad);
  return grad;
}

}  // namespace emokd
