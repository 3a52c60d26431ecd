// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inrc/errors.hpp"

namespace inrc {

QuantGrid fit_grid(std::span<const double> values, int bitwidth) {
  if (values.empty()) throw ContractError("fit_grid: empty tensor");
  if (bitwidth < 2 || bitwidth > 16)
    throw ContractError("fit_grid: bitwidth must be in [2,16]");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  QuantGrid g;
  g.bitwidth = bitwidth;
  // Round to the float32 header representation up front so the encoder and
  // decoder share one grid.
  g.min_value = static_cast<double>(static_cast<float>(lo));
  if (hi == lo) {
    g.step = 1.0;
  } else {
    const double raw = (hi - lo) / static_cast<double>(g.max_code());
    g.step = static_cast<double>(static_cast<float>(raw));
  }
  return g;
}

std::vector<std::uint32_t> quantize(std::span<const double> values,
                                    const QuantGrid& grid) {
  std::vector<std::uint32_t> codes(values.size());
  const double inv = 1.0 / grid.step;
  const double maxc = static_cast<double>(grid.max_code());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double c = std::nearbyint((values[i] - grid.min_value) * inv);
    c = std::clamp(c, 0.0, maxc);
    codes[i] = static_cast<std::uint32_t>(c);
  }
  return codes;
}

std::vector<double> dequantize(std::span<const std::uint32_t> codes,
                               const QuantGrid& grid) {
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = grid.dequant(codes[i]);
  return out;
}

std::vector<double> flatten_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[k++] = m(r, c);
  return v;
}

Eigen::MatrixXd unflatten_row_major(std::span<const double> v,
                                    Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw ContractError("unflatten_row_major: size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[k++];
  return m;
}

QuantizedParams quantize_params(const ParamSet& params, int bitwidth,
                                QuantMode mode) {
  QuantizedParams qp;
  qp.mode = mode;
  qp.tensors.reserve(params.tensor_count());
  for (const auto& layer : params.layers) {
    const auto w = flatten_row_major(layer.W);
    QuantizedTensor tw;
    tw.grid = fit_grid(w, bitwidth);
    tw.codes = quantize(w, tw.grid);
    qp.tensors.push_back(std::move(tw));

    std::vector<double> b(layer.b.data(), layer.b.data() + layer.b.size());
    QuantizedTensor tb;
    tb.grid = fit_grid(b, bitwidth);
    tb.codes = quantize(b, tb.grid);
    qp.tensors.push_back(std::move(tb));
  }
  return qp;
}

ParamSet dequantize_params(const QuantizedParams& qp,
                           const ModelConfig& config) {
  config.validate();
  const int depth = config.linear_layers();
  if (qp.tensors.size() != static_cast<std::size_t>(2 * depth))
    throw ContractError("dequantize_params: tensor count mismatch");
  ParamSet params;
  params.role = (qp.mode == QuantMode::delta) ? ParamRole::delta : ParamRole::full;
  params.layers.resize(depth);
  int fan_in = config.encoded_dim();
  for (int l = 0; l < depth; ++l) {
    const int fan_out = (l == depth - 1) ? config.out_dim : config.hidden_width;
    const auto& tw = qp.tensors[2 * l];
    const auto& tb = qp.tensors[2 * l + 1];
    if (tw.codes.size() != static_cast<std::size_t>(fan_out) * fan_in ||
        tb.codes.size() != static_cast<std::size_t>(fan_out))
      throw ContractError("dequantize_params: code count mismatch");
    params.layers[l].W =
        unflatten_row_major(dequantize(tw.codes, tw.grid), fan_out, fan_in);
    const auto b = dequantize(tb.codes, tb.grid);
    params.layers[l].b = Eigen::Map<const Eigen::VectorXd>(
        b.data(), static_cast<Eigen::Index>(b.size()));
    fan_in = fan_out;
  }
  return params;
}

QuantizedParams requantize(const ParamSet& params,
                           const QuantizedParams& grids) {
  if (grids.tensors.size() != params.tensor_count())
    throw ContractError("requantize: tensor count mismatch");
  QuantizedParams qp;
  qp.mode = grids.mode;
  qp.init_hash = grids.init_hash;
  qp.tensors.resize(grids.tensors.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    qp.tensors[2 * l].grid = grids.tensors[2 * l].grid;
    qp.tensors[2 * l].codes =
        quantize(flatten_row_major(params.layers[l].W), qp.tensors[2 * l].grid);
    qp.tensors[2 * l + 1].grid = grids.tensors[2 * l + 1].grid;
    const auto& b = params.layers[l].b;
    qp.tensors[2 * l + 1].codes = quantize(
        std::span<const double>(b.data(), static_cast<std::size_t>(b.size())),
        qp.tensors[2 * l + 1].grid);
  }
  return qp;
}

namespace {

using Arr = Eigen::ArrayXXd;

double layer_mse(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& wq,
                 const Eigen::MatrixXd& ref) {
  return (inputs * wq.transpose() - ref).squaredNorm() /
         static_cast<double>(ref.size());
}

Eigen::MatrixXd codes_to_weights(const Arr& codes, const QuantGrid& grid) {
  return (grid.min_value + codes * grid.step).matrix();
}

}  // namespace

std::vector<std::uint32_t> adaround(const Eigen::MatrixXd& weights,
                                    const Eigen::MatrixXd& inputs,
                                    const QuantGrid& grid,
                                    const AdaRoundConfig& cfg,
                                    AdaRoundDiag* diag) {
  if (inputs.cols() != weights.cols())
    throw ContractError("adaround: input width != weight fan-in");
  const auto flat = flatten_row_major(weights);
  const auto nearest = quantize(flat, grid);
  if (cfg.iters <= 0) return nearest;

  const Eigen::Index out_dim = weights.rows();
  const Eigen::Index in_dim = weights.cols();
  const double maxc = static_cast<double>(grid.max_code());

  // Floor codes and the per-weight headroom for rounding up.
  Arr floor_codes(out_dim, in_dim), span(out_dim, in_dim), resid(out_dim, in_dim);
  for (Eigen::Index r = 0; r < out_dim; ++r) {
    for (Eigen::Index c = 0; c < in_dim; ++c) {
      const double t = (weights(r, c) - grid.min_value) / grid.step;
      const double f = std::clamp(std::floor(t), 0.0, maxc);
      floor_codes(r, c) = f;
      span(r, c) = (f < maxc) ? 1.0 : 0.0;
      resid(r, c) = std::clamp(t - f, 0.0, 1.0);
    }
  }

  // Rectified sigmoid h(V) = clamp(sigmoid(V)(zeta-gamma)+gamma, 0, 1),
  // initialized so that h equals the fractional residual.
  const double zg = cfg.zeta - cfg.gamma;
  Arr v(out_dim, in_dim);
  for (Eigen::Index r = 0; r < out_dim; ++r)
    for (Eigen::Index c = 0; c < in_dim; ++c) {
      const double h0 = std::clamp(resid(r, c), 0.011, 0.989);
      const double s = (h0 - cfg.gamma) / zg;
      v(r, c) = std::log(s / (1.0 - s));
    }

  const Eigen::MatrixXd ref = inputs * weights.transpose();
  const double inv_n = 1.0 / static_cast<double>(ref.size());

  Arr m = Arr::Zero(out_dim, in_dim), vv = Arr::Zero(out_dim, in_dim);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Arr h;
  for (int t = 0; t < cfg.iters; ++t) {
    const double beta =
        cfg.beta_start +
        (cfg.beta_end - cfg.beta_start) *
            (cfg.iters > 1 ? static_cast<double>(t) / (cfg.iters - 1) : 1.0);
    const Arr sig = 1.0 / (1.0 + (-v).exp());
    const Arr h_raw = sig * zg + cfg.gamma;
    h = h_raw.min(1.0).max(0.0);
    const Eigen::MatrixXd w_soft =
        codes_to_weights(floor_codes + span * h, grid);
    const Eigen::MatrixXd err = inputs * w_soft.transpose() - ref;

    Arr dh = (2.0 * inv_n) * (err.transpose() * inputs).array() * span *
             grid.step;
    // Regularizer 1 - |2h-1|^beta pushes h toward {0,1}.
    const Arr two_h = 2.0 * h - 1.0;
    dh += cfg.reg_lambda *
          (-2.0 * beta) * two_h.abs().pow(beta - 1.0) * two_h.sign();
    // Chain through the rectified sigmoid; zero outside the clamp.
    const Arr interior =
        ((h_raw > 0.0) && (h_raw < 1.0)).cast<double>();
    Arr dv = dh * interior * zg * sig * (1.0 - sig);

    m = b1 * m + (1.0 - b1) * dv;
    vv = b2 * vv + (1.0 - b2) * dv * dv;
    const double c1 = 1.0 - std::pow(b1, t + 1);
    const double c2 = 1.0 - std::pow(b2, t + 1);
    v -= cfg.lr * (m / c1) / ((vv / c2).sqrt() + eps);
  }

  const Arr sig = 1.0 / (1.0 + (-v).exp());
  const Arr h_final = (sig * zg + cfg.gamma).min(1.0).max(0.0);
  const Arr hard = (h_final >= 0.5).cast<double>();
  const Arr codes = floor_codes + span * hard;

  // Never worse than nearest rounding on the optimization batch.
  Arr nearest_codes(out_dim, in_dim);
  {
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < out_dim; ++r)
      for (Eigen::Index c = 0; c < in_dim; ++c)
        nearest_codes(r, c) = static_cast<double>(nearest[k++]);
  }
  const double mse_opt = layer_mse(inputs, codes_to_weights(codes, grid), ref);
  const double mse_near =
      layer_mse(inputs, codes_to_weights(nearest_codes, grid), ref);
  const Arr& chosen = (mse_opt <= mse_near) ? codes : nearest_codes;

  if (diag) {
    diag->final_h.resize(static_cast<std::size_t>(out_dim * in_dim));
    std::size_t k2 = 0;
    for (Eigen::Index r = 0; r < out_dim; ++r)
      for (Eigen::Index c = 0; c < in_dim; ++c) diag->final_h[k2++] = h_final(r, c);
    diag->mse_soft = mse_opt;
    diag->mse_nearest = mse_near;
    diag->fell_back = !(mse_opt <= mse_near);
  }

  std::vector<std::uint32_t> out(static_cast<std::size_t>(out_dim * in_dim));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < out_dim; ++r)
    for (Eigen::Index c = 0; c < in_dim; ++c)
      out[k++] = static_cast<std::uint32_t>(chosen(r, c));
  return out;
}

QuantizedParams adaround_params(const ParamSet& params, const ModelConfig& cfg,
                                const Eigen::MatrixXd& inputs,
                                const QuantizedParams& grids,
                                const AdaRoundConfig& acfg,
                                const ParamSet* theta0) {
  if (grids.tensors.size() != params.tensor_count())
    throw ContractError("adaround_params: grid count mismatch");
  if (theta0 && !params.same_shape(*theta0))
    throw ContractError("adaround_params: theta0 shape mismatch");
  QuantizedParams result;
  result.mode = grids.mode;
  result.init_hash = grids.init_hash;
  result.tensors.resize(grids.tensors.size());

  const std::size_t depth = params.layers.size();
  Eigen::MatrixXd act = inputs;
  for (std::size_t l = 0; l < depth; ++l) {
    auto& tw = result.tensors[2 * l];
    auto& tb = result.tensors[2 * l + 1];
    tw.grid = grids.tensors[2 * l].grid;
    tb.grid = grids.tensors[2 * l + 1].grid;

    // With the fixed/quantized decomposition the fixed branch cancels in the
    // layer reconstruction error, so the delta tensor optimizes directly.
    tw.codes = adaround(params.layers[l].W, act, tw.grid, acfg);
    const auto& b = params.layers[l].b;
    tb.codes = quantize(
        std::span<const double>(b.data(), static_cast<std::size_t>(b.size())),
        tb.grid);

    if (l + 1 == depth) break;
    Eigen::MatrixXd wq = unflatten_row_major(dequantize(tw.codes, tw.grid),
                                             params.layers[l].W.rows(),
                                             params.layers[l].W.cols());
    const auto bqv = dequantize(tb.codes, tb.grid);
    Eigen::VectorXd bq = Eigen::Map<const Eigen::VectorXd>(
        bqv.data(), static_cast<Eigen::Index>(bqv.size()));
    if (theta0) {
      wq += theta0->layers[l].W;
      bq += theta0->layers[l].b;
    }
    Eigen::MatrixXd z = act * wq.transpose();
    z.rowwise() += bq.transpose();
    detail::apply_activation<double>(cfg, z, act);
  }
  return result;
}

QatResult qat(const QuantizedParams& start, const ModelConfig& cfg,
              const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
              const QatConfig& qcfg, const ParamSet* theta0) {
  if (qcfg.epochs < 0) throw ContractError("qat: epochs >= 0");
  ParamSet latent = dequantize_params(start, cfg);
  if (theta0 && !latent.same_shape(*theta0))
    throw ContractError("qat: theta0 shape mismatch");

  auto effective = [&](const QuantizedParams& qp) {
    ParamSet eff = dequantize_params(qp, cfg);
    if (theta0) {
      axpy(eff, 1.0, *theta0);
      eff.role = ParamRole::full;
    }
    return eff;
  };
  auto instance_mse = [&](const QuantizedParams& qp) {
    const Eigen::MatrixXd y = forward(effective(qp), cfg, inputs);
    return (y - targets).squaredNorm() / static_cast<double>(inputs.rows());
  };

  QatResult res;
  res.qparams = start;
  res.mse_before = instance_mse(start);
  double best = res.mse_before;

  AdamState adam = AdamState::like(latent);
  for (long e = 0; e < qcfg.epochs; ++e) {
    const QuantizedParams qcur = requantize(latent, start);
    LossGrad lg;
    try {
      lg = loss_and_grad(effective(qcur), cfg, inputs, targets);
    } catch (const DivergedError&) {
      res.diverged = true;
      res.qparams = start;
      res.mse_after = res.mse_before;
      return res;
    }
    if (lg.loss < best) {
      best = lg.loss;
      res.qparams = qcur;
    }
    // Straight-through estimator: identity inside the representable range,
    // zero outside.
    for (std::size_t l = 0; l < latent.layers.size(); ++l) {
      const QuantGrid& gw = start.tensors[2 * l].grid;
      const QuantGrid& gb = start.tensors[2 * l + 1].grid;
      lg.grads.layers[l].W =
          lg.grads.layers[l].W.array() *
          ((latent.layers[l].W.array() >= gw.min_value) &&
           (latent.layers[l].W.array() <= gw.max_value()))
              .cast<double>();
      lg.grads.layers[l].b =
          lg.grads.layers[l].b.array() *
          ((latent.layers[l].b.array() >= gb.min_value) &&
           (latent.layers[l].b.array() <= gb.max_value()))
              .cast<double>();
    }
    adam_step(adam, latent, lg.grads, qcfg.lr);
    if (!latent.all_finite()) {
      res.diverged = true;
      res.qparams = start;
      res.mse_after = res.mse_before;
      return res;
    }
  }
  // The state after the last step is a candidate too.
  if (qcfg.epochs > 0) {
    const QuantizedParams qfinal = requantize(latent, start);
    const double mse_final = instance_mse(qfinal);
    if (mse_final < best) {
      best = mse_final;
      res.qparams = qfinal;
    }
  }
  res.mse_after = best;
  return res;
}

}  // namespace inrc
