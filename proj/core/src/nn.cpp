// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/nn.hpp"

#include <cmath>
#include <utility>

#include "inrc/rng.hpp"

namespace inrc {

void ModelConfig::validate() const {
  if (in_dim < 1 || out_dim < 1)
    throw ContractError("ModelConfig: in_dim and out_dim must be >= 1");
  if (hidden_layers < 1) throw ContractError("ModelConfig: hidden_layers >= 1");
  if (hidden_width < 1) throw ContractError("ModelConfig: hidden_width >= 1");
  if (!(omega > 0.0)) throw ContractError("ModelConfig: omega > 0");
  if (frequencies < 0) throw ContractError("ModelConfig: frequencies >= 0");
  if (encoding == EncodingKind::gaussian && frequencies < 1)
    throw ContractError("ModelConfig: gaussian encoding needs frequencies >= 1");
  if (encoding != EncodingKind::none && !(sigma > 0.0))
    throw ContractError("ModelConfig: sigma > 0");
}

ParamSet32 cast_to_float(const ParamSet& p) {
  ParamSet32 out;
  out.role = p.role;
  out.layers.reserve(p.layers.size());
  for (const auto& l : p.layers)
    out.layers.push_back({l.W.cast<float>(), l.b.cast<float>()});
  return out;
}

ParamSet cast_to_double(const ParamSet32& p) {
  ParamSet out;
  out.role = p.role;
  out.layers.reserve(p.layers.size());
  for (const auto& l : p.layers)
    out.layers.push_back({l.W.cast<double>(), l.b.cast<double>()});
  return out;
}

ParamSet init_siren(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamSet params;
  const int depth = config.linear_layers();
  params.layers.reserve(depth);
  int fan_in = config.encoded_dim();
  for (int l = 0; l < depth; ++l) {
    const int fan_out = (l == depth - 1) ? config.out_dim : config.hidden_width;
    const double bound = (l == 0)
                             ? 1.0 / fan_in
                             : std::sqrt(6.0 / fan_in) / config.omega;
    LinearT<double> layer;
    layer.W.resize(fan_out, fan_in);
    layer.b.resize(fan_out);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.W(r, c) = rng.next_uniform(-bound, bound);
    for (int r = 0; r < fan_out; ++r)
      layer.b(r) = rng.next_uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return params;
}

namespace {

MatX<double> activation_second_deriv(const ModelConfig& cfg,
                                     const MatX<double>& z) {
  if (cfg.activation == Activation::sine) {
    const double w = cfg.omega;
    return (-(w * w) * (w * z.array()).sin()).matrix();
  }
  return MatX<double>::Zero(z.rows(), z.cols());
}

}  // namespace

ParamSet hessian_vector_product(const ParamSet& params, const ModelConfig& cfg,
                                const MatX<double>& inputs,
                                const MatX<double>& targets,
                                const ParamSet& dir) {
  detail::check_forward_shapes(params, cfg, inputs);
  if (!params.same_shape(dir))
    throw ContractError("hessian_vector_product: direction shape mismatch");

  const std::size_t depth = params.layers.size();
  const double inv_b = 1.0 / static_cast<double>(inputs.rows());

  // Primal forward.
  std::vector<MatX<double>> z(depth), act(depth);
  {
    const MatX<double>* prev = &inputs;
    for (std::size_t l = 0; l < depth; ++l) {
      z[l].noalias() = *prev * params.layers[l].W.transpose();
      z[l].rowwise() += params.layers[l].b.transpose();
      if (l + 1 < depth) {
        detail::apply_activation<double>(cfg, z[l], act[l]);
      } else {
        act[l] = z[l];
      }
      prev = &act[l];
    }
  }

  // Tangent forward (inputs are constant, so their tangent is zero).
  std::vector<MatX<double>> zt(depth), at(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const MatX<double>& below = (l == 0) ? inputs : act[l - 1];
    zt[l].noalias() = below * dir.layers[l].W.transpose();
    if (l > 0) zt[l].noalias() += at[l - 1] * params.layers[l].W.transpose();
    zt[l].rowwise() += dir.layers[l].b.transpose();
    if (l + 1 < depth) {
      at[l] = zt[l].cwiseProduct(detail::activation_deriv<double>(cfg, z[l]));
    } else {
      at[l] = zt[l];
    }
  }

  // Primal and tangent reverse passes, interleaved per layer.
  ParamSet hv = zeros_like(params);
  MatX<double> g = 2.0 * inv_b * (act[depth - 1] - targets);
  MatX<double> gt = 2.0 * inv_b * at[depth - 1];
  for (std::size_t l = depth; l-- > 0;) {
    const MatX<double>& below = (l == 0) ? inputs : act[l - 1];
    hv.layers[l].W.noalias() = gt.transpose() * below;
    if (l > 0) hv.layers[l].W.noalias() += g.transpose() * at[l - 1];
    hv.layers[l].b = gt.colwise().sum().transpose();
    if (l > 0) {
      MatX<double> da;
      da.noalias() = g * params.layers[l].W;
      MatX<double> dat;
      dat.noalias() = gt * params.layers[l].W;
      dat.noalias() += g * dir.layers[l].W;
      const MatX<double> d1 = detail::activation_deriv<double>(cfg, z[l - 1]);
      gt = dat.cwiseProduct(d1) +
           da.cwiseProduct(activation_second_deriv(cfg, z[l - 1]))
               .cwiseProduct(zt[l - 1]);
      g = da.cwiseProduct(d1);
    }
  }
  return hv;
}

ParamSet inner_loop(const ParamSet& theta0, const std::vector<ParamSet>& alpha,
                    const ModelConfig& cfg, const MatX<double>& inputs,
                    const MatX<double>& targets) {
  ParamSet phi = theta0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!phi.same_shape(alpha[j]))
      throw ContractError("inner_loop: alpha shape mismatch");
    const auto lg = loss_and_grad(phi, cfg, inputs, targets);
    for (std::size_t l = 0; l < phi.layers.size(); ++l) {
      phi.layers[l].W -= alpha[j].layers[l].W.cwiseProduct(lg.grads.layers[l].W);
      phi.layers[l].b -= alpha[j].layers[l].b.cwiseProduct(lg.grads.layers[l].b);
    }
    if (!phi.all_finite())
      throw DivergedError("inner_loop: non-finite parameters", static_cast<long>(j));
  }
  return phi;
}

MetaGrad meta_grad(const ParamSet& theta0, const std::vector<ParamSet>& alpha,
                   const ModelConfig& cfg, const MatX<double>& inputs,
                   const MatX<double>& targets) {
  const std::size_t k = alpha.size();

  // Inner unroll, keeping every state and gradient for the reverse sweep.
  std::vector<ParamSet> phi(k + 1);
  std::vector<ParamSet> inner_grads(k);
  phi[0] = theta0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!theta0.same_shape(alpha[j]))
      throw ContractError("meta_grad: alpha shape mismatch");
    LossGrad lg;
    try {
      lg = loss_and_grad(phi[j], cfg, inputs, targets);
    } catch (const DivergedError&) {
      throw DivergedError("meta_grad: inner loop diverged", static_cast<long>(j));
    }
    inner_grads[j] = std::move(lg.grads);
    phi[j + 1] = phi[j];
    for (std::size_t l = 0; l < phi[j].layers.size(); ++l) {
      phi[j + 1].layers[l].W -=
          alpha[j].layers[l].W.cwiseProduct(inner_grads[j].layers[l].W);
      phi[j + 1].layers[l].b -=
          alpha[j].layers[l].b.cwiseProduct(inner_grads[j].layers[l].b);
    }
    if (!phi[j + 1].all_finite())
      throw DivergedError("meta_grad: inner loop diverged", static_cast<long>(j));
  }

  MetaGrad out;
  LossGrad outer;
  try {
    outer = loss_and_grad(phi[k], cfg, inputs, targets);
  } catch (const DivergedError&) {
    throw DivergedError("meta_grad: outer loss diverged", static_cast<long>(k));
  }
  out.outer_loss = outer.loss;
  out.d_alpha.resize(k);

  // Reverse sweep through the unrolled updates:
  //   v_j = v_{j+1} - H(phi_j) (alpha_j (.) v_{j+1})
  //   dL/dalpha_j = -g_j (.) v_{j+1}
  ParamSet v = std::move(outer.grads);
  for (std::size_t j = k; j-- > 0;) {
    ParamSet da = zeros_like(theta0);
    ParamSet u = zeros_like(theta0);
    for (std::size_t l = 0; l < v.layers.size(); ++l) {
      da.layers[l].W = -inner_grads[j].layers[l].W.cwiseProduct(v.layers[l].W);
      da.layers[l].b = -inner_grads[j].layers[l].b.cwiseProduct(v.layers[l].b);
      u.layers[l].W = alpha[j].layers[l].W.cwiseProduct(v.layers[l].W);
      u.layers[l].b = alpha[j].layers[l].b.cwiseProduct(v.layers[l].b);
    }
    out.d_alpha[j] = std::move(da);
    const ParamSet hu = hessian_vector_product(phi[j], cfg, inputs, targets, u);
    axpy(v, -1.0, hu);
  }
  out.d_theta0 = std::move(v);
  return out;
}

}  // namespace inrc
