// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "inrc/hash.hpp"
#include "inrc/nn.hpp"

namespace inrc {

/// Uniform affine quantization grid. Code c dequantizes to min + c*step.
/// min and step are rounded to 32-bit floats when the grid is fit, because
/// that is how they travel in the bitstream header; every stage downstream
/// of fit_grid sees the rounded values.
struct QuantGrid {
  double min_value = 0.0;
  double step = 1.0;
  int bitwidth = 8;

  std::uint32_t levels() const { return 1u << bitwidth; }
  std::uint32_t max_code() const { return levels() - 1; }
  double dequant(std::uint32_t code) const { return min_value + code * step; }
  /// Highest representable value, min + (2^b - 1)*step.
  double max_value() const { return dequant(max_code()); }
};

/// Fits the grid to the value range of the tensor: min = minimum,
/// step = (max-min)/(2^b - 1). A constant tensor degenerates to step = 1
/// with every code 0. Bitwidth must be in [2, 16].
QuantGrid fit_grid(std::span<const double> values, int bitwidth);

/// Nearest quantization, round-half-to-even, clamped to [0, 2^b - 1].
std::vector<std::uint32_t> quantize(std::span<const double> values,
                                    const QuantGrid& grid);
std::vector<double> dequantize(std::span<const std::uint32_t> codes,
                               const QuantGrid& grid);

// Tensor serialization order used everywhere codes meet bytes:
// layer 0 W (row-major), layer 0 b, layer 1 W, layer 1 b, ...
std::vector<double> flatten_row_major(const Eigen::MatrixXd& m);
Eigen::MatrixXd unflatten_row_major(std::span<const double> v,
                                    Eigen::Index rows, Eigen::Index cols);

enum class QuantMode : std::uint8_t { full = 0, delta = 1 };

struct QuantizedTensor {
  std::vector<std::uint32_t> codes;
  QuantGrid grid;
};

/// Per-tensor integer codes for a full weight set or a weight update.
/// Tensor order matches the ParamSet layer order (W then b per layer).
struct QuantizedParams {
  std::vector<QuantizedTensor> tensors;
  QuantMode mode = QuantMode::full;
  Digest128 init_hash{};  // delta mode: content hash of the referenced init
};

/// Nearest-rounds every tensor with its own fitted grid.
QuantizedParams quantize_params(const ParamSet& params, int bitwidth,
                                QuantMode mode = QuantMode::full);

/// Rebuilds the (full or delta) ParamSet described by `config`.
ParamSet dequantize_params(const QuantizedParams& qp,
                           const ModelConfig& config);

/// Re-quantizes `params` onto already-fitted grids (used by QAT).
QuantizedParams requantize(const ParamSet& params, const QuantizedParams& grids);

struct AdaRoundConfig {
  int iters = 1000;
  double reg_lambda = 1e-4;
  double lr = 1e-2;  // Adam rate for the soft-rounding variables
  double zeta = 1.1;
  double gamma = -0.1;
  double beta_start = 20.0;  // annealed linearly to beta_end over iters
  double beta_end = 2.0;
};

struct AdaRoundDiag {
  std::vector<double> final_h;  // soft rounding values before thresholding
  double mse_soft = 0.0;        // layer MSE of the optimized rounding
  double mse_nearest = 0.0;     // layer MSE of plain nearest rounding
  bool fell_back = false;       // nearest won and was returned
};

/// Chooses round-up/round-down per weight by optimizing rectified-sigmoid
/// soft rounding against the layer's float output on `inputs`, then hard
/// thresholds at 0.5. Guaranteed no worse than nearest rounding on the
/// optimization batch (falls back if the optimized MSE is not). iters = 0
/// returns nearest rounding. Returns row-major codes.
std::vector<std::uint32_t> adaround(const Eigen::MatrixXd& weights,
                                    const Eigen::MatrixXd& inputs,
                                    const QuantGrid& grid,
                                    const AdaRoundConfig& cfg,
                                    AdaRoundDiag* diag = nullptr);

/// Applies adaround layer by layer in forward order, feeding each layer the
/// activations of the already-quantized predecessors. Biases are nearest-
/// rounded. For delta mode pass theta0: the quantized tensors are the deltas
/// and each layer runs as the fixed (W0 x + b0) branch plus the quantized
/// delta branch. `grids` supplies the fitted grids (codes therein ignored).
QuantizedParams adaround_params(const ParamSet& params, const ModelConfig& cfg,
                                const Eigen::MatrixXd& inputs,
                                const QuantizedParams& grids,
                                const AdaRoundConfig& acfg,
                                const ParamSet* theta0 = nullptr);

struct QatConfig {
  long epochs = 300;
  double lr = 1e-6;
};

struct QatResult {
  QuantizedParams qparams;
  bool diverged = false;   // set when training went non-finite; codes are the input codes
  double mse_before = 0.0; // instance MSE of the input codes
  double mse_after = 0.0;  // instance MSE of the returned codes
};

/// Quantization-aware retraining with the straight-through estimator:
/// forward quantizes the latent weights on the fixed grids, backward passes
/// gradients through unchanged inside the representable range and zeroes
/// them outside. Keeps the best-MSE checkpoint, so mse_after <= mse_before.
/// Delta mode (theta0 given) trains the delta branch only.
QatResult qat(const QuantizedParams& start, const ModelConfig& cfg,
              const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
              const QatConfig& qcfg, const ParamSet* theta0 = nullptr);

}  // namespace inrc
