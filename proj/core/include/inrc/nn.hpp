// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "inrc/errors.hpp"

namespace inrc {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Activation : std::uint8_t { sine = 0, relu = 1 };
enum class EncodingKind : std::uint8_t { none = 0, positional = 1, gaussian = 2 };

/// Network architecture plus input-encoding description. Everything needed
/// to rebuild the evaluation function travels in the bitstream header, so
/// this struct has a fixed serialized form (see bitstream.hpp).
struct ModelConfig {
  int in_dim = 2;        // 2 for images, 3 for signed distance fields
  int out_dim = 3;       // 3 for RGB, 1 for SDF
  int hidden_layers = 3; // N
  int hidden_width = 32; // M
  Activation activation = Activation::sine;
  double omega = 30.0;   // sine frequency; also scales the init bounds
  EncodingKind encoding = EncodingKind::positional;
  int frequencies = 16;  // L
  double sigma = 1.4;    // frequency spacing (positional) or stddev (gaussian)
  std::uint64_t encoding_seed = 0;  // gaussian frequency matrix seed

  /// Width of the encoded input the first layer sees.
  int encoded_dim() const {
    switch (encoding) {
      case EncodingKind::none: return in_dim;
      case EncodingKind::positional: return in_dim * (1 + 2 * frequencies);
      case EncodingKind::gaussian: return 2 * frequencies;
    }
    return in_dim;
  }

  int linear_layers() const { return hidden_layers + 1; }

  void validate() const;

  /// Copy with omega and sigma rounded to their float32 wire precision.
  /// Every pipeline entry point canonicalizes first, so the values used for
  /// training are exactly the values a decoder reads back from the header.
  ModelConfig canonical() const {
    ModelConfig c = *this;
    c.omega = static_cast<double>(static_cast<float>(omega));
    c.sigma = static_cast<double>(static_cast<float>(sigma));
    return c;
  }

  bool operator==(const ModelConfig&) const = default;
};

enum class ParamRole : std::uint8_t { full = 0, delta = 1, init = 2 };

template <typename S>
struct LinearT {
  MatX<S> W;  // out x in
  VecX<S> b;  // out
};

/// Ordered per-layer weight/bias tensors. Also used for gradients, weight
/// updates (deltas) and meta-learned initializations; `role` records which.
template <typename S>
struct ParamSetT {
  std::vector<LinearT<S>> layers;
  ParamRole role = ParamRole::full;

  std::size_t tensor_count() const { return layers.size() * 2; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
  }

  bool same_shape(const ParamSetT& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].W.rows() != o.layers[i].W.rows() ||
          layers[i].W.cols() != o.layers[i].W.cols() ||
          layers[i].b.size() != o.layers[i].b.size())
        return false;
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.W.allFinite() || !l.b.allFinite()) return false;
    return true;
  }

  void set_zero() {
    for (auto& l : layers) {
      l.W.setZero();
      l.b.setZero();
    }
  }

  S max_abs() const {
    S m = 0;
    for (const auto& l : layers) {
      if (l.W.size() > 0) m = std::max(m, l.W.cwiseAbs().maxCoeff());
      if (l.b.size() > 0) m = std::max(m, l.b.cwiseAbs().maxCoeff());
    }
    return m;
  }
};

using ParamSet = ParamSetT<double>;
using ParamSet32 = ParamSetT<float>;

template <typename S, typename F>
void for_each_tensor(ParamSetT<S>& p, F&& f) {
  for (auto& l : p.layers) {
    f(l.W);
    f(l.b);
  }
}

template <typename S, typename F>
void for_each_tensor(const ParamSetT<S>& p, F&& f) {
  for (const auto& l : p.layers) {
    f(l.W);
    f(l.b);
  }
}

template <typename S, typename F>
void zip_tensors(ParamSetT<S>& a, const ParamSetT<S>& b, F&& f) {
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    f(a.layers[i].W, b.layers[i].W);
    f(a.layers[i].b, b.layers[i].b);
  }
}

template <typename S>
ParamSetT<S> zeros_like(const ParamSetT<S>& p) {
  ParamSetT<S> z;
  z.role = p.role;
  z.layers.reserve(p.layers.size());
  for (const auto& l : p.layers)
    z.layers.push_back({MatX<S>::Zero(l.W.rows(), l.W.cols()),
                        VecX<S>::Zero(l.b.size())});
  return z;
}

/// this += a * x (shape-matched).
template <typename S>
void axpy(ParamSetT<S>& dst, S a, const ParamSetT<S>& x) {
  zip_tensors(dst, x, [a](auto& d, const auto& s) { d += a * s; });
}

ParamSet32 cast_to_float(const ParamSet& p);
ParamSet cast_to_double(const ParamSet32& p);

/// Sine-network initialization: first layer U(-1/fan_in, 1/fan_in), deeper
/// layers U(-sqrt(6/fan_in)/omega, sqrt(6/fan_in)/omega). Biases use the same
/// bound as their layer's weights. Draw order is fixed: per layer, W entries
/// row-major, then b.
ParamSet init_siren(const ModelConfig& config, std::uint64_t seed);

namespace detail {

template <typename S>
inline void apply_activation(const ModelConfig& cfg, const MatX<S>& z, MatX<S>& a) {
  if (cfg.activation == Activation::sine) {
    const S w = static_cast<S>(cfg.omega);
    a = (w * z.array()).sin().matrix();
  } else {
    a = z.cwiseMax(S(0));
  }
}

template <typename S>
inline MatX<S> activation_deriv(const ModelConfig& cfg, const MatX<S>& z) {
  if (cfg.activation == Activation::sine) {
    const S w = static_cast<S>(cfg.omega);
    return (w * (w * z.array()).cos()).matrix();
  }
  // relu'(0) is defined as 0.
  return (z.array() > S(0)).template cast<S>().matrix();
}

template <typename S>
void check_forward_shapes(const ParamSetT<S>& params, const ModelConfig& cfg,
                          const MatX<S>& inputs) {
  if (params.layers.empty())
    throw ContractError("forward: empty parameter set");
  if (static_cast<int>(params.layers.size()) != cfg.linear_layers())
    throw ContractError("forward: layer count does not match config");
  Eigen::Index width = inputs.cols();
  if (width != cfg.encoded_dim())
    throw ContractError("forward: input width does not match encoded_dim");
  for (const auto& l : params.layers) {
    if (l.W.cols() != width || l.b.size() != l.W.rows())
      throw ContractError("forward: layer shapes do not chain");
    width = l.W.rows();
  }
  if (width != cfg.out_dim)
    throw ContractError("forward: final layer width does not match out_dim");
}

}  // namespace detail

/// Batched MLP evaluation. Rows of `inputs` are independent samples that are
/// already encoded (see encoding.hpp). Hidden layers apply the configured
/// activation, the final layer is affine.
template <typename S>
MatX<S> forward(const ParamSetT<S>& params, const ModelConfig& cfg,
                const MatX<S>& inputs) {
  detail::check_forward_shapes(params, cfg, inputs);
  const std::size_t depth = params.layers.size();
  MatX<S> a = inputs;
  MatX<S> z;
  for (std::size_t l = 0; l < depth; ++l) {
    z.noalias() = a * params.layers[l].W.transpose();
    z.rowwise() += params.layers[l].b.transpose();
    if (l + 1 < depth) {
      detail::apply_activation<S>(cfg, z, a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

template <typename S>
struct LossGradT {
  S loss;
  ParamSetT<S> grads;
};
using LossGrad = LossGradT<double>;

/// Loss of Eq-style instance fitting: mean over rows of the squared output
/// error vector, plus l1_lambda * ||params - ref||_1 (ref omitted: plain L1).
/// The L1 subgradient at zero is 0. Throws DivergedError on non-finite loss.
template <typename S>
LossGradT<S> loss_and_grad(const ParamSetT<S>& params, const ModelConfig& cfg,
                           const MatX<S>& inputs, const MatX<S>& targets,
                           double l1_lambda = 0.0,
                           const ParamSetT<S>* ref = nullptr) {
  detail::check_forward_shapes(params, cfg, inputs);
  if (targets.rows() != inputs.rows() || targets.cols() != cfg.out_dim)
    throw ContractError("loss_and_grad: target shape mismatch");
  if (ref && !params.same_shape(*ref))
    throw ContractError("loss_and_grad: ref shape mismatch");

  const std::size_t depth = params.layers.size();
  const Eigen::Index batch = inputs.rows();

  std::vector<MatX<S>> z(depth);   // pre-activations
  std::vector<MatX<S>> act(depth); // post-activations (act[depth-1] = output)
  {
    const MatX<S>* prev = &inputs;
    for (std::size_t l = 0; l < depth; ++l) {
      z[l].noalias() = *prev * params.layers[l].W.transpose();
      z[l].rowwise() += params.layers[l].b.transpose();
      if (l + 1 < depth) {
        detail::apply_activation<S>(cfg, z[l], act[l]);
      } else {
        act[l] = z[l];
      }
      prev = &act[l];
    }
  }

  const MatX<S> diff = act[depth - 1] - targets;
  S loss = diff.squaredNorm() / static_cast<S>(batch);

  LossGradT<S> out;
  out.grads = zeros_like(params);

  // Reverse pass.
  MatX<S> g = (S(2) / static_cast<S>(batch)) * diff;
  for (std::size_t l = depth; l-- > 0;) {
    const MatX<S>& below = (l == 0) ? inputs : act[l - 1];
    out.grads.layers[l].W.noalias() = g.transpose() * below;
    out.grads.layers[l].b = g.colwise().sum().transpose();
    if (l > 0) {
      MatX<S> da;
      da.noalias() = g * params.layers[l].W;
      g = da.cwiseProduct(detail::activation_deriv<S>(cfg, z[l - 1]));
    }
  }

  if (l1_lambda != 0.0) {
    const S lam = static_cast<S>(l1_lambda);
    for (std::size_t l = 0; l < depth; ++l) {
      auto add_l1 = [&](const auto& w, const auto* rw, auto& gw) {
        if (rw) {
          loss += lam * (w - *rw).cwiseAbs().sum();
          gw.array() += lam * (w - *rw).array().sign();
        } else {
          loss += lam * w.cwiseAbs().sum();
          gw.array() += lam * w.array().sign();
        }
      };
      add_l1(params.layers[l].W, ref ? &ref->layers[l].W : nullptr,
             out.grads.layers[l].W);
      add_l1(params.layers[l].b, ref ? &ref->layers[l].b : nullptr,
             out.grads.layers[l].b);
    }
  }

  if (!std::isfinite(static_cast<double>(loss)))
    throw DivergedError("loss_and_grad: non-finite loss", -1);
  out.loss = loss;
  return out;
}

/// Adam optimizer state; m and v shape-match the parameters they update.
template <typename S>
struct AdamStateT {
  ParamSetT<S> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamStateT like(const ParamSetT<S>& p) {
    AdamStateT s;
    s.m = zeros_like(p);
    s.v = zeros_like(p);
    return s;
  }
};
using AdamState = AdamStateT<double>;

/// One Adam update with bias correction.
template <typename S>
void adam_step(AdamStateT<S>& state, ParamSetT<S>& params,
               const ParamSetT<S>& grads, double lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.m))
    throw ContractError("adam_step: shape mismatch");
  state.t += 1;
  const S b1 = static_cast<S>(state.beta1);
  const S b2 = static_cast<S>(state.beta2);
  const S eps = static_cast<S>(state.eps);
  const S c1 = S(1) - static_cast<S>(std::pow(state.beta1, state.t));
  const S c2 = S(1) - static_cast<S>(std::pow(state.beta2, state.t));
  const S step = static_cast<S>(lr);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto upd = [&](auto& w, auto& m, auto& v, const auto& g) {
      m = b1 * m + (S(1) - b1) * g;
      v = b2 * v + (S(1) - b2) * g.cwiseProduct(g);
      w.array() -=
          step * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    upd(params.layers[l].W, state.m.layers[l].W, state.v.layers[l].W,
        grads.layers[l].W);
    upd(params.layers[l].b, state.m.layers[l].b, state.v.layers[l].b,
        grads.layers[l].b);
  }
}

/// Exact Hessian-vector product of the plain MSE loss (no L1 term) at
/// `params` with direction `dir`, via forward-over-reverse differentiation.
ParamSet hessian_vector_product(const ParamSet& params, const ModelConfig& cfg,
                                const MatX<double>& inputs,
                                const MatX<double>& targets,
                                const ParamSet& dir);

struct MetaGrad {
  double outer_loss = 0.0;
  ParamSet d_theta0;
  std::vector<ParamSet> d_alpha;
};

/// Differentiates the unrolled inner loop
///   phi_0 = theta0;  phi_{j+1} = phi_j - alpha_j (.) grad MSE(phi_j)
/// and returns the outer loss MSE(phi_k) together with its exact derivatives
/// with respect to theta0 and every alpha entry. alpha holds k shape-matched
/// per-parameter rate sets; k = alpha.size() (k = 0 reduces to a plain
/// gradient). Throws DivergedError on any non-finite intermediate.
MetaGrad meta_grad(const ParamSet& theta0, const std::vector<ParamSet>& alpha,
                   const ModelConfig& cfg, const MatX<double>& inputs,
                   const MatX<double>& targets);

/// Runs the inner loop only and returns phi_k (used by the decoder-side
/// warm start and by validation).
ParamSet inner_loop(const ParamSet& theta0, const std::vector<ParamSet>& alpha,
                    const ModelConfig& cfg, const MatX<double>& inputs,
                    const MatX<double>& targets);

}  // namespace inrc
