// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inrc/bitstream.hpp"
#include "inrc/image.hpp"
#include "inrc/meta.hpp"
#include "inrc/quant.hpp"
#include "inrc/training.hpp"

namespace inrc {

enum class Precision : std::uint8_t { f64 = 0, f32 = 1 };

/// Everything the image encoder needs; defaults follow the stock pipeline
/// (bitwidth 8 for random inits, 7 when a meta init is supplied).
struct EncodeOptions {
  ModelConfig model;
  OverfitConfig overfit;
  AdaRoundConfig adaround;
  QatConfig qat;
  int bitwidth = 8;
  std::uint64_t seed = 0;
  /// AdaRound optimizes on a seeded row subsample of at least this many grid
  /// rows (the full grid when it is smaller).
  int adaround_sample_rows = 4096;
  Precision precision = Precision::f64;
};

struct EncodeReport {
  double bpp = 0.0;
  double psnr = 0.0;       // measured on the decoded container, 8-bit output
  double mse = 0.0;
  long epochs_run = 0;
  long best_epoch = -1;
  double wall_seconds = 0.0;
  std::size_t container_bytes = 0;
  bool qat_diverged = false;
  bool delta_mode = false;
  Digest128 init_hash{};
};

/// Full pipeline: overfit (or meta warm start + overfit), per-tensor grid
/// fit, AdaRound, QAT, entropy coding, container serialization. The report
/// PSNR is computed by decoding the produced bytes, never from in-memory
/// state.
std::vector<std::uint8_t> encode_image(const ImageF& image,
                                       const EncodeOptions& options,
                                       const MetaInit* minit = nullptr,
                                       EncodeReport* report = nullptr);

/// Reconstructs the full parameter set described by a parsed container
/// (resolving theta0 through the registry in delta mode).
ParamSet decode_params(const CodecContainer& container,
                       const InitRegistry* registry = nullptr);

/// Decodes to an image; `scale` > 1 evaluates the network on a finer grid
/// (resolution-agnostic decode). Values are clamped to [0,1].
ImageF decode_image(std::span<const std::uint8_t> bytes,
                    const InitRegistry* registry = nullptr, int scale = 1);

/// Rounds every pixel onto the 8-bit lattice (round(v*255)/255), i.e. the
/// exact effect of writing and re-reading a PPM. Reported PSNR always refers
/// to this 8-bit artifact.
ImageF quantize_8bit(const ImageF& img);

/// Rate-distortion sample for CSV reports.
struct RDPoint {
  std::string instance;
  std::string method;
  int width = 0;     // hidden width, 0 when not applicable
  int bitwidth = 0;  // 0 when not applicable
  double bpp = 0.0;
  double psnr = 0.0;
};

/// CSV schema: instance,method,width,b,bpp,psnr. Appends, writing the header
/// only when the file is new/empty.
void append_rd_csv(const std::string& path, std::span<const RDPoint> points);
std::vector<RDPoint> read_rd_csv(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace inrc
