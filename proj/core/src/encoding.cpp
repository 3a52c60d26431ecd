// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/encoding.hpp"

#include <cmath>
#include <numbers>

#include "inrc/errors.hpp"
#include "inrc/rng.hpp"

namespace inrc {

Eigen::MatrixXd make_grid(int width, int height) {
  if (width < 2 || height < 2)
    throw DegenerateGridError("make_grid: both dimensions must be >= 2");
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(width) * height, 2);
  Eigen::Index row = 0;
  for (int i = 0; i < width; ++i) {
    const double x = 2.0 * i / (width - 1) - 1.0;
    for (int j = 0; j < height; ++j, ++row) {
      coords(row, 0) = x;
      coords(row, 1) = 2.0 * j / (height - 1) - 1.0;
    }
  }
  return coords;
}

Eigen::MatrixXd make_grid3(int n) {
  if (n < 2) throw DegenerateGridError("make_grid3: resolution must be >= 2");
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(n) * n * n, 3);
  Eigen::Index row = 0;
  for (int ix = 0; ix < n; ++ix) {
    const double x = 2.0 * ix / (n - 1) - 1.0;
    for (int iy = 0; iy < n; ++iy) {
      const double y = 2.0 * iy / (n - 1) - 1.0;
      for (int iz = 0; iz < n; ++iz, ++row) {
        coords(row, 0) = x;
        coords(row, 1) = y;
        coords(row, 2) = 2.0 * iz / (n - 1) - 1.0;
      }
    }
  }
  return coords;
}

Eigen::MatrixXd positional_encode(const Eigen::MatrixXd& coords, int L,
                                  double sigma) {
  if (L < 0) throw ContractError("positional_encode: L >= 0");
  if (!(sigma > 0.0)) throw ContractError("positional_encode: sigma > 0");
  const Eigen::Index rows = coords.rows();
  const Eigen::Index in_dim = coords.cols();
  const Eigen::Index width = in_dim * (1 + 2 * static_cast<Eigen::Index>(L));
  Eigen::MatrixXd out(rows, width);
  for (Eigen::Index d = 0; d < in_dim; ++d) {
    Eigen::Index col = d * (1 + 2 * L);
    out.col(col++) = coords.col(d);
    double freq = std::numbers::pi;  // sigma^0 * pi
    for (int l = 0; l < L; ++l) {
      out.col(col++) = (freq * coords.col(d).array()).sin();
      out.col(col++) = (freq * coords.col(d).array()).cos();
      freq *= sigma;
    }
  }
  return out;
}

Eigen::MatrixXd gaussian_frequencies(int L, int in_dim, double sigma,
                                     std::uint64_t seed) {
  if (L < 1) throw ContractError("gaussian_frequencies: L >= 1");
  Rng rng(seed);
  Eigen::MatrixXd freq(L, in_dim);
  for (int r = 0; r < L; ++r)
    for (int d = 0; d < in_dim; ++d) freq(r, d) = sigma * rng.next_normal();
  return freq;
}

Eigen::MatrixXd gaussian_encode(const Eigen::MatrixXd& coords, int L,
                                double sigma, std::uint64_t seed) {
  const Eigen::MatrixXd freq =
      gaussian_frequencies(L, static_cast<int>(coords.cols()), sigma, seed);
  const Eigen::MatrixXd proj =
      2.0 * std::numbers::pi * (coords * freq.transpose());
  Eigen::MatrixXd out(coords.rows(), 2 * static_cast<Eigen::Index>(L));
  for (int r = 0; r < L; ++r) {
    out.col(2 * r) = proj.col(r).array().sin();
    out.col(2 * r + 1) = proj.col(r).array().cos();
  }
  return out;
}

Eigen::MatrixXd encode_inputs(const Eigen::MatrixXd& coords,
                              const ModelConfig& cfg) {
  if (coords.cols() != cfg.in_dim)
    throw ContractError("encode_inputs: coordinate width != in_dim");
  switch (cfg.encoding) {
    case EncodingKind::none:
      return coords;
    case EncodingKind::positional:
      return positional_encode(coords, cfg.frequencies, cfg.sigma);
    case EncodingKind::gaussian:
      return gaussian_encode(coords, cfg.frequencies, cfg.sigma,
                             cfg.encoding_seed);
  }
  throw ContractError("encode_inputs: unknown encoding");
}

}  // namespace inrc
