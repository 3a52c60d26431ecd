// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "inrc/hash.hpp"
#include "inrc/nn.hpp"
#include "inrc/quant.hpp"

namespace inrc {

// Adaptive binary range coder. 32-bit registers, byte-wise renormalization
// (range stays >= 2^24 between symbols), carry propagation into the output
// buffer, 4-byte flush. Probability states are 12-bit estimates of P(bit=1)
// in [1, 4095], initialized to 2048 and adapted with a shift-5 update:
//   bit 1: p += (4096 - p) >> 5
//   bit 0: p -= p >> 5
// The state is read before each symbol and updated after, identically on
// both sides.

constexpr std::uint16_t kProbInit = 2048;
constexpr std::uint16_t kProbBits = 12;

inline void update_prob(std::uint16_t& p, int bit) {
  if (bit)
    p = static_cast<std::uint16_t>(p + ((4096 - p) >> 5));
  else
    p = static_cast<std::uint16_t>(p - (p >> 5));
}

class RangeEncoder {
 public:
  void encode_bit(std::uint16_t& prob, int bit);

  /// Flushes 4 tail bytes and returns the stream. The encoder is spent.
  std::vector<std::uint8_t> finish();

  std::size_t bytes_pending() const { return out_.size(); }

 private:
  void propagate_carry();

  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  /// The stream must hold at least the 4 flush bytes.
  explicit RangeDecoder(std::span<const std::uint8_t> data);

  int decode_bit(std::uint16_t& prob);

  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

struct CodeTensorView {
  std::span<const std::uint32_t> codes;
  int bitwidth;
};

/// Codes each value as `bitwidth` fixed bits, MSB first, one adaptive context
/// per (tensor index, bit position). Out-of-range codes are a contract
/// violation.
std::vector<std::uint8_t> encode_codes(std::span<const CodeTensorView> tensors);

/// Exact inverse of encode_codes given the tensor layout
/// (element count, bitwidth) per tensor. Truncated streams throw ParseError.
std::vector<std::vector<std::uint32_t>> decode_codes(
    std::span<const std::uint8_t> bytes,
    std::span<const std::pair<std::size_t, int>> layout);

enum class PayloadKind : std::uint8_t { image = 0, sdf = 1 };

/// Self-describing compressed representation. The byte length of the
/// serialized container is the figure every bitrate report is computed from;
/// there is no side information.
struct CodecContainer {
  std::uint8_t version = 1;
  QuantMode mode = QuantMode::full;
  PayloadKind kind = PayloadKind::image;
  ModelConfig config;
  std::uint32_t width = 0;   // image payloads only
  std::uint32_t height = 0;
  Digest128 init_hash{};     // delta mode only
  std::vector<QuantGrid> grids;  // per tensor, ParamSet order
  std::vector<std::uint8_t> payload;

  /// (element count, bitwidth) per tensor, derived from config and grids.
  std::vector<std::pair<std::size_t, int>> code_layout() const;
};

constexpr std::uint8_t kContainerVersion = 1;

/// Little-endian fixed layout; see bitstream.cpp for the field order.
/// parse(serialize(c)) == c bit-exactly; trailing bytes are an error.
std::vector<std::uint8_t> serialize_container(const CodecContainer& c);
CodecContainer parse_container(std::span<const std::uint8_t> bytes);

/// The config wire format shared by containers and init files (29 bytes).
void append_model_config(std::vector<std::uint8_t>& out, const ModelConfig& c);
ModelConfig read_model_config(std::span<const std::uint8_t> bytes,
                              std::size_t& pos);

}  // namespace inrc
