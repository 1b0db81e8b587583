#include "emokd/gate.hpp"

#include <cmath>

#include "emokd/errors.hpp"
#include "emokd/rng.hpp"

namespace emokd {

const std::vector<GateVariant>& all_gate_variants() {
  static const std::vector<GateVariant> variants = {
      GateVariant::concat_linear, GateVariant::moe, GateVariant::bilinear,
      GateVariant::dynamic_weighting, GateVariant::cross_gating};
  return variants;
}

std::string to_string(GateVariant variant) {
  switch (variant) {
    case GateVariant::concat_linear: return "concat_linear";
    case GateVariant::moe: return "moe";
    case GateVariant::bilinear: return "bilinear";
    case GateVariant::dynamic_weighting: return "dynamic_weighting";
    case GateVariant::cross_gating: return "cross_gating";
  }
  throw InvalidInput("bad gate variant");
}

GateVariant gate_variant_from_string(const std::string& s) {
  for (GateVariant v : all_gate_variants()) {
    if (to_string(v) == s) return v;
  }
  throw UsageError("unknown gate variant '" + s + "'");
}

void GateConfig::validate() const {
  if (num_classes < 2) throw ConfigError("gate needs at least 2 classes");
  if (variant == GateVariant::moe && experts < 1) {
    throw ConfigError("moe gate needs at least 1 expert");
  }
}

std::size_t gate_param_count(GateVariant variant, std::size_t C,
                             std::size_t experts) {
  switch (variant) {
    case GateVariant::concat_linear:
      return 2 * C * C + C;
    case GateVariant::moe:
      return experts * (2 * C * C + C) + (2 * C * experts + experts) +
             (C * C + C);
    case GateVariant::bilinear:
      return C * C * C + C * C + C;
    case GateVariant::dynamic_weighting:
      return 2 * C * 2 + 2;
    case GateVariant::cross_gating:
      return 2 * (C * C + C);
  }
  throw InvalidInput("bad gate variant");
}

GateParams GateParams::zeros(const GateConfig& config) {
  config.validate();
  GateParams p;
  p.config = config;
  p.theta.assign(gate_param_count(config.variant, config.num_classes,
                                  config.experts),
                 0.0);
  return p;
}

GateParams GateParams::initialized(const GateConfig& config, uint64_t seed) {
  GateParams p = zeros(config);
  // Fan-in of every affine block is at most 2C; one shared bound keeps the
  // layout code simple.
  const double bound = 1.0 / std::sqrt(2.0 * static_cast<double>(config.num_classes));
  Rng rng = Rng(seed).child(0x6a7e);
  for (double& v : p.theta) v = rng.uniform(-bound, bound);
  return p;
}

namespace {

void check_inputs(const GateParams& params, std::span<const double> v1,
                  std::span<const double> v2) {
  const std::size_t C = params.config.num_classes;
  if (v1.size() != C || v2.size() != C) {
    throw ShapeError("gate inputs must have length C");
  }
  if (params.theta.size() != gate_param_count(params.config.variant, C,
                                              params.config.experts)) {
    throw ShapeError("gate parameter buffer has the wrong size");
  }
}

// y += W x (+ b), W row-major out x in
void affine_into(const double* w, const double* b, std::span<const double> x,
                 std::size_t out_dim, double* y) {
  const std::size_t in_dim = x.size();
  for (std::size_t o = 0; o < out_dim; ++o) {
    double acc = b ? b[o] : 0.0;
    const double* row = w + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

std::vector<double> concat(std::span<const double> v1,
                           std::span<const double> v2) {
  std::vector<double> h;
  h.reserve(v1.size() + v2.size());
  h.insert(h.end(), v1.begin(), v1.end());
  h.insert(h.end(), v2.begin(), v2.end());
  return h;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<double> gate_forward_raw(const GateParams& params,
                                     std::span<const double> v1,
                                     std::span<const double> v2) {
  check_inputs(params, v1, v2);
  const std::size_t C = params.config.num_classes;
  const double* t = params.theta.data();

  switch (params.config.variant) {
    case GateVariant::concat_linear: {
      const std::vector<double> h = concat(v1, v2);
      std::vector<double> y(C);
      affine_into(t, t + 2 * C * C, h, C, y.data());
      return y;
    }
    case GateVariant::moe: {
      const std::size_t E = params.config.experts;
      const std::vector<double> h = concat(v1, v2);
      const std::size_t expert_block = 2 * C * C + C;
      // mixing weights: softmax over an E-dim affine of h
      const double* mix_w = t + E * expert_block;
      const double* mix_b = mix_w + 2 * C * E;
      std::vector<double> mix_logits(E);
      affine_into(mix_w, mix_b, h, E, mix_logits.data());
      const std::vector<double> mix = softmax_raw(mix_logits, 1.0);
      // weighted sum of expert outputs
      std::vector<double> blended(C, 0.0);
      std::vector<double> expert_out(C);
      for (std::size_t e = 0; e < E; ++e) {
        const double* ew = t + e * expert_block;
        const double* eb = ew + 2 * C * C;
        affine_into(ew, eb, h, C, expert_out.data());
        for (std::size_t i = 0; i < C; ++i) blended[i] += mix[e] * expert_out[i];
      }
      const double* final_w = mix_b + E;
      const double* final_b = final_w + C * C;
      std::vector<double> y(C);
      affine_into(final_w, final_b, blended, C, y.data());
      return y;
    }
    case GateVariant::bilinear: {
      // z_k = v1^T W_k v2, one C x C slice per output dim
      std::vector<double> z(C);
      for (std::size_t k = 0; k < C; ++k) {
        const double* wk = t + k * C * C;
        double acc = 0.0;
        for (std::size_t i = 0; i < C; ++i) {
          const double* row = wk + i * C;
          for (std::size_t j = 0; j < C; ++j) acc += v1[i] * row[j] * v2[j];
        }
        z[k] = acc;
      }
      const double* final_w = t + C * C * C;
      const double* final_b = final_w + C * C;
      std::vector<double> y(C);
      affine_into(final_w, final_b, z, C, y.data());
      return y;
    }
    case GateVariant::dynamic_weighting: {
      const std::vector<double> h = concat(v1, v2);
      std::vector<double> wl(2);
      affine_into(t, t + 4 * C, h, 2, wl.data());
      const std::vector<double> w = softmax_raw(wl, 1.0);
      std::vector<double> y(C);
      for (std::size_t i = 0; i < C; ++i) y[i] = w[0] * v1[i] + w[1] * v2[i];
      return y;
    }
    case GateVariant::cross_gating: {
      // g1 gates v1 and is computed from v2; g2 the other way round
      const double* a_w = t;
      const double* a_b = t + C * C;
      const double* b_w = a_b + C;
      const double* b_b = b_w + C * C;
      std::vector<double> g1(C);
      std::vector<double> g2(C);
      affine_into(a_w, a_b, v2, C, g1.data());
      affine_into(b_w, b_b, v1, C, g2.data());
      std::vector<double> y(C);
      for (std::size_t i = 0; i < C; ++i) {
        y[i] = sigmoid(g1[i]) * v1[i] + sigmoid(g2[i]) * v2[i];
      }
      return y;
    }
  }
  throw InvalidInput("bad gate variant");
}

LogitVector gate_forward(const ProbVector& v1, const ProbVector& v2,
                         const GateParams& params) {
  if (!(*v1.space == *v2.space)) {
    throw ShapeError("gate inputs come from different label spaces");
  }
  return LogitVector{v1.space, gate_forward_raw(params, v1.values, v2.values)};
}

double gate_loss_and_grad(const GateParams& params, std::span<const double> v1,
                          std::span<const double> v2, std::size_t target_index,
                          std::span<double> grad) {
  check_inputs(params, v1, v2);
  const std::size_t C = params.config.num_classes;
  if (target_index >= C) throw ShapeError("target index out of range");
  if (grad.size() != params.theta.size()) {
    throw ShapeError("gradient buffer size mismatch");
  }

  const std::vector<double> y = gate_forward_raw(params, v1, v2);
  const std::vector<double> log_p = log_softmax_raw(y, 1.0);
  const double loss = -log_p[target_index];

  // dL/dy = p - onehot(target)
  std::vector<double> dy(C);
  for (std::size_t i = 0; i < C; ++i) {
    dy[i] = std::exp(log_p[i]) - (i == target_index ? 1.0 : 0.0);
  }

  const double* t = params.theta.data();
  switch (params.config.variant) {
    case GateVariant::concat_linear: {
      const std::vector<double> h = concat(v1, v2);
      double* gw = grad.data();
      double* gb = grad.data() + 2 * C * C;
      for (std::size_t o = 0; o < C; ++o) {
        gb[o] += dy[o];
        double* row = gw + o * 2 * C;
        for (std::size_t i = 0; i < 2 * C; ++i) row[i] += dy[o] * h[i];
      }
      break;
    }
    case GateVariant::moe: {
      const std::size_t E = params.config.experts;
      const std::vector<double> h = concat(v1, v2);
      const std::size_t expert_block = 2 * C * C + C;
      const double* mix_w = t + E * expert_block;
      const double* mix_b = mix_w + 2 * C * E;
      const double* final_w = mix_b + E;

      std::vector<double> mix_logits(E);
      affine_into(mix_w, mix_b, h, E, mix_logits.data());
      const std::vector<double> mix = softmax_raw(mix_logits, 1.0);

      std::vector<std::vector<double>> expert_out(E, std::vector<double>(C));
      std::vector<double> blended(C, 0.0);
      for (std::size_t e = 0; e < E; ++e) {
        const double* ew = t + e * expert_block;
        const double* eb = ew + 2 * C * C;
        affine_into(ew, eb, h, C, expert_out[e].data());
        for (std::size_t i = 0; i < C; ++i) blended[i] += mix[e] * expert_out[e][i];
      }

      // final affine
      double* g_final_w = grad.data() + (final_w - t);
      double* g_final_b = g_final_w + C * C;
      std::vector<double> d_blended(C, 0.0);
      for (std::size_t o = 0; o < C; ++o) {
        g_final_b[o] += dy[o];
        double* row = g_final_w + o * C;
        const double* wrow = final_w + o * C;
        for (std::size_t i = 0; i < C; ++i) {
          row[i] += dy[o] * blended[i];
          d_blended[i] += dy[o] * wrow[i];
        }
      }
      // experts and mixing weights
      std::vector<double> d_mix(E, 0.0);
      for (std::size_t e = 0; e < E; ++e) {
        double* g_ew = grad.data() + e * expert_block;
        double* g_eb = g_ew + 2 * C * C;
        for (std::size_t o = 0; o < C; ++o) {
          const double d = mix[e] * d_blended[o];
          g_eb[o] += d;
          double* row = g_ew + o * 2 * C;
          for (std::size_t i = 0; i < 2 * C; ++i) row[i] += d * h[i];
          d_mix[e] += d_blended[o] * expert_out[e][o];
        }
      }
      // softmax backward for the mixer
      double dot = 0.0;
      for (std::size_t e = 0; e < E; ++e) dot += mix[e] * d_mix[e];
      double* g_mix_w = grad.data() + (mix_w - t);
      double* g_mix_b = grad.data() + (mix_b - t);
      for (std::size_t e = 0; e < E; ++e) {
        const double d = mix[e] * (d_mix[e] - dot);
        g_mix_b[e] += d;
        double* row = g_mix_w + e * 2 * C;
        for (std::size_t i = 0; i < 2 * C; ++i) row[i] += d * h[i];
      }
      break;
    }
    case GateVariant::bilinear: {
      const double* final_w = t + C * C * C;
      std::vector<double> z(C);
      for (std::size_t k = 0; k < C; ++k) {
        const double* wk = t + k * C * C;
        double acc = 0.0;
        for (std::size_t i = 0; i < C; ++i) {
          const double* row = wk + i * C;
          for (std::size_t j = 0; j < C; ++j) acc += v1[i] * row[j] * v2[j];
        }
        z[k] = acc;
      }
      double* g_final_w = grad.data() + C * C * C;
      double* g_final_b = g_final_w + C * C;
      std::vector<double> dz(C, 0.0);
      for (std::size_t o = 0; o < C; ++o) {
        g_final_b[o] += dy[o];
        double* row = g_final_w + o * C;
        const double* wrow = final_w + o * C;
        for (std::size_t k = 0; k < C; ++k) {
          row[k] += dy[o] * z[k];
          dz[k] += dy[o] * wrow[k];
        }
      }
      for (std::size_t k = 0; k < C; ++k) {
        double* g_wk = grad.data() + k * C * C;
        for (std::size_t i = 0; i < C; ++i) {
          double* row = g_wk + i * C;
          const double dv = dz[k] * v1[i];
          for (std::size_t j = 0; j < C; ++j) row[j] += dv * v2[j];
        }
      }
      break;
    }
    case GateVariant::dynamic_weighting: {
      const std::vector<double> h = concat(v1, v2);
      std::vector<double> wl(2);
      affine_into(t, t + 4 * C, h, 2, wl.data());
      const std::vector<double> w = softmax_raw(wl, 1.0);
      double dw[2] = {0.0, 0.0};
      for (std::size_t i = 0; i < C; ++i) {
        dw[0] += dy[i] * v1[i];
        dw[1] += dy[i] * v2[i];
      }
      const double dot = w[0] * dw[0] + w[1] * dw[1];
      double* g_w = grad.data();
      double* g_b = grad.data() + 4 * C;
      for (std::size_t e = 0; e < 2; ++e) {
        const double d = w[e] * (dw[e] - dot);
        g_b[e] += d;
        double* row = g_w + e * 2 * C;
        for (std::size_t i = 0; i < 2 * C; ++i) row[i] += d * h[i];
      }
      break;
    }
    case GateVariant::cross_gating: {
      const double* a_w = t;
      const double* a_b = t + C * C;
      const double* b_w = a_b + C;
      const double* b_b = b_w + C * C;
      std::vector<double> pre1(C);
      std::vector<double> pre2(C);
      affine_into(a_w, a_b, v2, C, pre1.data());
      affine_into(b_w, b_b, v1, C, pre2.data());
      double* g_a_w = grad.data();
      double* g_a_b = grad.data() + C * C;
      double* g_b_w = g_a_b + C;
      double* g_b_b = g_b_w + C * C;
      for (std::size_t i = 0; i < C; ++i) {
        const double s1 = sigmoid(pre1[i]);
        const double s2 = sigmoid(pre2[i]);
        const double d_pre1 = dy[i] * v1[i] * s1 * (1.0 - s1);
        const double d_pre2 = dy[i] * v2[i] * s2 * (1.0 - s2);
        g_a_b[i] += d_pre1;
        g_b_b[i] += d_pre2;
        double* a_row = g_a_w + i * C;
        double* b_row = g_b_w + i * C;
        for (std::size_t j = 0; j < C; ++j) {
          a_row[j] += d_pre1 * v2[j];
          b_row[j] += d_pre2 * v1[j];
        }
      }
      break;
    }
  }
  return loss;
}

std::pair<std::string, ProbVector> fuse_predict(const ProbVector& v1,
                                                const ProbVector& v2,
                                                const GateParams& params) {
  const LogitVector logits = gate_forward(v1, v2, params);
  ProbVector probs{logits.space, softmax_raw(logits.values, 1.0)};
  std::string label = argmax_label(probs);
  return {std::move(label), std::move(probs)};
}

}  // namespace emokd
