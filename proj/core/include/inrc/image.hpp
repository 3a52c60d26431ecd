// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace inrc {

/// RGB image with values in [0,1], raster order (rows top to bottom, pixels
/// left to right, channels interleaved). 8-bit files map v -> v/255.
struct ImageF {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> pixels;

  double at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Binary 8-bit RGB PPM (P6, maxval 255), the mandatory interchange format.
ImageF load_ppm(const std::string& path);
void save_ppm(const ImageF& img, const std::string& path);

/// Area-averaging (box filter) resample; handles any scale factor.
ImageF box_resize(const ImageF& img, int new_width, int new_height);

ImageF crop(const ImageF& img, int x0, int y0, int w, int h);

/// Targets in coordinate-grid row order (row index = x*H + y, matching
/// make_grid), one column per channel.
Eigen::MatrixXd image_to_targets(const ImageF& img);

/// Inverse of image_to_targets; output values are clamped to [0,1].
ImageF targets_to_image(const Eigen::MatrixXd& targets, int width, int height);

/// Mean over pixels of the squared color-difference norm.
double image_mse(const ImageF& a, const ImageF& b);

}  // namespace inrc
