// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "inrc/nn.hpp"

namespace inrc {

// Coordinate grids and input encodings. All functions here are pure and
// stateless; encoding a subset of rows equals the subset of the encoded grid.

/// Uniform 2D grid over [-1,1]^2, p_ij = (2i/(W-1)-1, 2j/(H-1)-1).
/// Row order is fixed and documented: i (width) is the outer index, j
/// (height) the inner one, so row index = i*H + j. W,H >= 2.
Eigen::MatrixXd make_grid(int width, int height);

/// Uniform 3D grid over [-1,1]^3, resolution n per axis, x outer / z inner
/// (row index = (ix*n + iy)*n + iz). n >= 2.
Eigen::MatrixXd make_grid3(int n);

/// Per scalar coordinate p emits
///   (p, sin(sigma^0 pi p), cos(sigma^0 pi p), ...,
///       sin(sigma^(L-1) pi p), cos(sigma^(L-1) pi p)),
/// concatenated over the input coordinates in order. Output width is
/// in_dim*(1+2L).
Eigen::MatrixXd positional_encode(const Eigen::MatrixXd& coords, int L,
                                  double sigma);

/// Random Fourier features: row r of the frequency matrix is drawn i.i.d.
/// N(0, sigma^2) from the seeded generator (rows in order, entries per row in
/// coordinate order), and the encoding is (sin(2 pi b_r.p), cos(2 pi b_r.p))
/// for r = 1..L. The seed travels in the model config, so a decoder rebuilds
/// the identical matrix.
Eigen::MatrixXd gaussian_frequencies(int L, int in_dim, double sigma,
                                     std::uint64_t seed);
Eigen::MatrixXd gaussian_encode(const Eigen::MatrixXd& coords, int L,
                                double sigma, std::uint64_t seed);

/// Dispatches on cfg.encoding.
Eigen::MatrixXd encode_inputs(const Eigen::MatrixXd& coords,
                              const ModelConfig& cfg);

}  // namespace inrc
