// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "inrc/errors.hpp"

namespace inrc {

namespace {

// Reads the next PNM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

ImageF load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (next_token(in) != "P6")
    throw ParseError(path + ": not a binary PPM (P6)", 0);
  ImageF img;
  try {
    img.width = std::stoi(next_token(in));
    img.height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (maxval != 255)
      throw ParseError(path + ": only maxval 255 is supported", 0);
  } catch (const std::logic_error&) {
    throw ParseError(path + ": malformed PPM header", 0);
  }
  if (img.width < 1 || img.height < 1)
    throw ParseError(path + ": bad dimensions", 0);
  img.channels = 3;
  const std::size_t n =
      static_cast<std::size_t>(img.width) * img.height * 3;
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw ParseError(path + ": truncated pixel data",
                     static_cast<std::size_t>(in.gcount()));
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void save_ppm(const ImageF& img, const std::string& path) {
  if (img.channels != 3) throw ContractError("save_ppm: 3 channels required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

ImageF box_resize(const ImageF& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1)
    throw ContractError("box_resize: target dimensions must be positive");
  ImageF out;
  out.width = new_width;
  out.height = new_height;
  out.channels = img.channels;
  out.pixels.assign(
      static_cast<std::size_t>(new_width) * new_height * img.channels, 0.0);
  const double sx = static_cast<double>(img.width) / new_width;
  const double sy = static_cast<double>(img.height) / new_height;
  for (int oy = 0; oy < new_height; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    for (int ox = 0; ox < new_width; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0, area = 0.0;
        for (int iy = static_cast<int>(std::floor(y0));
             iy < static_cast<int>(std::ceil(y1)); ++iy) {
          const double wy = std::min(y1, iy + 1.0) - std::max(y0, double(iy));
          if (wy <= 0.0 || iy < 0 || iy >= img.height) continue;
          for (int ix = static_cast<int>(std::floor(x0));
               ix < static_cast<int>(std::ceil(x1)); ++ix) {
            const double wx =
                std::min(x1, ix + 1.0) - std::max(x0, double(ix));
            if (wx <= 0.0 || ix < 0 || ix >= img.width) continue;
            acc += wx * wy * img.at(ix, iy, c);
            area += wx * wy;
          }
        }
        out.at(ox, oy, c) = area > 0.0 ? acc / area : 0.0;
      }
    }
  }
  return out;
}

ImageF crop(const ImageF& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > img.width ||
      y0 + h > img.height)
    throw ContractError("crop: window out of bounds");
  ImageF out;
  out.width = w;
  out.height = h;
  out.channels = img.channels;
  out.pixels.resize(static_cast<std::size_t>(w) * h * img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

Eigen::MatrixXd image_to_targets(const ImageF& img) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(img.width) * img.height,
                    img.channels);
  for (int x = 0; x < img.width; ++x)
    for (int y = 0; y < img.height; ++y)
      for (int c = 0; c < img.channels; ++c)
        t(static_cast<Eigen::Index>(x) * img.height + y, c) = img.at(x, y, c);
  return t;
}

ImageF targets_to_image(const Eigen::MatrixXd& targets, int width,
                        int height) {
  if (targets.rows() != static_cast<Eigen::Index>(width) * height)
    throw ContractError("targets_to_image: row count != W*H");
  ImageF img;
  img.width = width;
  img.height = height;
  img.channels = static_cast<int>(targets.cols());
  img.pixels.resize(static_cast<std::size_t>(width) * height * img.channels);
  for (int x = 0; x < width; ++x)
    for (int y = 0; y < height; ++y)
      for (int c = 0; c < img.channels; ++c)
        img.at(x, y, c) = std::clamp(
            targets(static_cast<Eigen::Index>(x) * height + y, c), 0.0, 1.0);
  return img;
}

double image_mse(const ImageF& a, const ImageF& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw ContractError("image_mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / (static_cast<double>(a.width) * a.height);
}

}  // namespace inrc
