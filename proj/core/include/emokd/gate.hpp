#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emokd/label_space.hpp"

namespace emokd {

// The five fusion architectures over (VLM one-hot v1, student
// distribution v2).
enum class GateVariant {
  concat_linear,
  moe,
  bilinear,
  dynamic_weighting,
  cross_gating,
};

const std::vector<GateVariant>& all_gate_variants();
std::string to_string(GateVariant variant);
GateVariant gate_variant_from_string(const std::string& s);

struct GateConfig {
  GateVariant variant = GateVariant::concat_linear;
  std::size_t num_classes = 8;
  std::size_t experts = 2;  // moe only

  void validate() const;
  bool operator==(const GateConfig&) const = default;
};

// concat_linear: 2C*C + C          (a C x 2C affine on h = [v1; v2])
// moe:           E*(2C*C + C) + (2C*E + E) + (C*C + C)
// bilinear:      C*C*C + (C*C + C) (C bilinear slices, then a C->C affine)
// dynamic:       2C*2 + 2          (softmax weights w1, w2)
// cross_gating:  2*(C*C + C)       (sigmoid gates from the opposite input)
std::size_t gate_param_count(GateVariant variant, std::size_t num_classes,
                             std::size_t experts = 2);

// Flat parameter buffer; the layout per variant is fixed and doubles as
// the checkpoint payload order.
struct GateParams {
  GateConfig config;
  std::vector<double> theta;

  static GateParams zeros(const GateConfig& config);
  static GateParams initialized(const GateConfig& config, uint64_t seed);
};

std::vector<double> gate_forward_raw(const GateParams& params,
                                     std::span<const double> v1,
                                     std::span<const double> v2);
LogitVector gate_forward(const ProbVector& v1, const ProbVector& v2,
                         const GateParams& params);

// Cross-entropy of softmax(gate_forward) against the target class; the
// gradient is added into grad (same flat layout as theta).
double gate_loss_and_grad(const GateParams& params, std::span<const double> v1,
                          std::span<const double> v2, std::size_t target_index,
                          std::span<double> grad);

// softmax of the gate logits at tau=1; the label is the argmax (ties to
// the lowest index).
std::pair<std::string, ProbVector> fuse_predict(const ProbVector& v1,
                                                const ProbVector& v2,
                                                const GateParams& params);

}  // namespace emokd
