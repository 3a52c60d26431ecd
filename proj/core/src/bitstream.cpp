// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/bitstream.hpp"

#include <cstring>

#include "inrc/errors.hpp"

namespace inrc {

namespace {
constexpr std::uint32_t kTopValue = 1u << 24;
}

void RangeEncoder::encode_bit(std::uint16_t& prob, int bit) {
  const std::uint32_t bound = (range_ >> kProbBits) * prob;
  if (bit) {
    range_ = bound;
  } else {
    const std::uint64_t nl = static_cast<std::uint64_t>(low_) + bound;
    if (nl >> 32) propagate_carry();
    low_ = static_cast<std::uint32_t>(nl);
    range_ -= bound;
  }
  update_prob(prob, bit);
  while (range_ < kTopValue) {
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ <<= 8;
    range_ <<= 8;
  }
}

void RangeEncoder::propagate_carry() {
  // A carry can only occur once at least one byte has been emitted and the
  // trailing 0xFF run never reaches the front of the buffer.
  std::size_t i = out_.size();
  while (i > 0) {
    if (++out_[--i] != 0) break;
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 4; ++i) {
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ <<= 8;
  }
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> data) : data_(data) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= data_.size())
    throw ParseError("range decoder: truncated stream", pos_);
  return data_[pos_++];
}

int RangeDecoder::decode_bit(std::uint16_t& prob) {
  const std::uint32_t bound = (range_ >> kProbBits) * prob;
  int bit;
  if (code_ < bound) {
    bit = 1;
    range_ = bound;
  } else {
    bit = 0;
    code_ -= bound;
    range_ -= bound;
  }
  update_prob(prob, bit);
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return bit;
}

std::vector<std::uint8_t> encode_codes(
    std::span<const CodeTensorView> tensors) {
  RangeEncoder enc;
  std::vector<std::vector<std::uint16_t>> contexts(tensors.size());
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto& tv = tensors[t];
    if (tv.bitwidth < 1 || tv.bitwidth > 16)
      throw ContractError("encode_codes: bitwidth out of range");
    contexts[t].assign(static_cast<std::size_t>(tv.bitwidth), kProbInit);
    const std::uint32_t limit = (1u << tv.bitwidth) - 1u;
    for (std::uint32_t code : tv.codes) {
      if (code > limit) throw ContractError("encode_codes: code out of range");
      for (int bitpos = tv.bitwidth - 1; bitpos >= 0; --bitpos) {
        const int bit = (code >> bitpos) & 1u;
        enc.encode_bit(contexts[t][static_cast<std::size_t>(bitpos)], bit);
      }
    }
  }
  return enc.finish();
}

std::vector<std::vector<std::uint32_t>> decode_codes(
    std::span<const std::uint8_t> bytes,
    std::span<const std::pair<std::size_t, int>> layout) {
  RangeDecoder dec(bytes);
  std::vector<std::vector<std::uint32_t>> out(layout.size());
  for (std::size_t t = 0; t < layout.size(); ++t) {
    const auto [count, bitwidth] = layout[t];
    if (bitwidth < 1 || bitwidth > 16)
      throw ContractError("decode_codes: bitwidth out of range");
    std::vector<std::uint16_t> ctx(static_cast<std::size_t>(bitwidth),
                                   kProbInit);
    out[t].resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t code = 0;
      for (int bitpos = bitwidth - 1; bitpos >= 0; --bitpos)
        code |= static_cast<std::uint32_t>(
                    dec.decode_bit(ctx[static_cast<std::size_t>(bitpos)]))
                << bitpos;
      out[t][i] = code;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Container format (all little-endian):
//   "INRC" | version u8 | mode u8 | kind u8
//   config: in_dim u8 | out_dim u8 | hidden_layers u8 | hidden_width u16 |
//           activation u8 | omega f32 | encoding u8 | frequencies u16 |
//           sigma f32 | encoding_seed u64
//   image payloads: width u32 | height u32
//   delta mode: init content hash, 16 bytes
//   tensor_count u16 | per tensor: bitwidth u8 | min f32 | step f32
//   payload_bits u64 | payload bytes
// ---------------------------------------------------------------------------

namespace {

void put_u8(std::vector<std::uint8_t>& v, std::uint8_t x) { v.push_back(x); }

void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(static_cast<std::uint8_t>(x));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
}

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& v, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& v, float x) {
  std::uint32_t bits;
  std::memcpy(&bits, &x, 4);
  put_u32(v, bits);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t x = static_cast<std::uint16_t>(data_[pos_]) |
                      static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return x;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return x;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float x;
    std::memcpy(&x, &bits, 4);
    return x;
  }
  void bytes(std::uint8_t* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void skip_to(std::size_t pos) {
    if (pos < pos_ || pos > data_.size())
      throw ParseError("container: bad seek", pos);
    pos_ = pos;
  }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      throw ParseError("container: truncated", pos_);
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void append_model_config(std::vector<std::uint8_t>& out, const ModelConfig& c) {
  put_u8(out, static_cast<std::uint8_t>(c.in_dim));
  put_u8(out, static_cast<std::uint8_t>(c.out_dim));
  put_u8(out, static_cast<std::uint8_t>(c.hidden_layers));
  put_u16(out, static_cast<std::uint16_t>(c.hidden_width));
  put_u8(out, static_cast<std::uint8_t>(c.activation));
  put_f32(out, static_cast<float>(c.omega));
  put_u8(out, static_cast<std::uint8_t>(c.encoding));
  put_u16(out, static_cast<std::uint16_t>(c.frequencies));
  put_f32(out, static_cast<float>(c.sigma));
  put_u64(out, c.encoding_seed);
}

ModelConfig read_model_config(std::span<const std::uint8_t> bytes,
                              std::size_t& pos) {
  Reader r(bytes.subspan(pos));
  ModelConfig c;
  c.in_dim = r.u8();
  c.out_dim = r.u8();
  c.hidden_layers = r.u8();
  c.hidden_width = r.u16();
  const std::uint8_t act = r.u8();
  if (act > 1) throw ParseError("config: bad activation", pos + r.pos() - 1);
  c.activation = static_cast<Activation>(act);
  c.omega = r.f32();
  const std::uint8_t enc = r.u8();
  if (enc > 2) throw ParseError("config: bad encoding", pos + r.pos() - 1);
  c.encoding = static_cast<EncodingKind>(enc);
  c.frequencies = r.u16();
  c.sigma = r.f32();
  c.encoding_seed = r.u64();
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw ParseError(std::string("config: invalid: ") + e.what(),
                     pos + r.pos());
  }
  pos += r.pos();
  return c;
}

std::vector<std::pair<std::size_t, int>> CodecContainer::code_layout() const {
  const int depth = config.linear_layers();
  if (grids.size() != static_cast<std::size_t>(2 * depth))
    throw ContractError("container: grid count does not match config");
  std::vector<std::pair<std::size_t, int>> layout;
  layout.reserve(grids.size());
  std::size_t fan_in = static_cast<std::size_t>(config.encoded_dim());
  for (int l = 0; l < depth; ++l) {
    const std::size_t fan_out = (l == depth - 1)
                                    ? static_cast<std::size_t>(config.out_dim)
                                    : static_cast<std::size_t>(config.hidden_width);
    layout.emplace_back(fan_out * fan_in, grids[2 * l].bitwidth);
    layout.emplace_back(fan_out, grids[2 * l + 1].bitwidth);
    fan_in = fan_out;
  }
  return layout;
}

std::vector<std::uint8_t> serialize_container(const CodecContainer& c) {
  c.config.validate();
  std::vector<std::uint8_t> v;
  v.reserve(64 + c.grids.size() * 9 + c.payload.size());
  v.insert(v.end(), {'I', 'N', 'R', 'C'});
  put_u8(v, c.version);
  put_u8(v, static_cast<std::uint8_t>(c.mode));
  put_u8(v, static_cast<std::uint8_t>(c.kind));
  append_model_config(v, c.config);
  if (c.kind == PayloadKind::image) {
    put_u32(v, c.width);
    put_u32(v, c.height);
  }
  if (c.mode == QuantMode::delta)
    v.insert(v.end(), c.init_hash.begin(), c.init_hash.end());
  put_u16(v, static_cast<std::uint16_t>(c.grids.size()));
  for (const auto& g : c.grids) {
    put_u8(v, static_cast<std::uint8_t>(g.bitwidth));
    put_f32(v, static_cast<float>(g.min_value));
    put_f32(v, static_cast<float>(g.step));
  }
  put_u64(v, static_cast<std::uint64_t>(c.payload.size()) * 8u);
  v.insert(v.end(), c.payload.begin(), c.payload.end());
  return v;
}

CodecContainer parse_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  std::uint8_t magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "INRC", 4) != 0)
    throw BadMagicError("container: bad magic", 0);
  CodecContainer c;
  c.version = r.u8();
  if (c.version != kContainerVersion)
    throw BadVersionError("container: unsupported version", r.pos() - 1);
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw ParseError("container: bad mode", r.pos() - 1);
  c.mode = static_cast<QuantMode>(mode);
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw ParseError("container: bad payload kind", r.pos() - 1);
  c.kind = static_cast<PayloadKind>(kind);
  {
    std::size_t pos = r.pos();
    c.config = read_model_config(bytes, pos);
    r.skip_to(pos);
  }
  if (c.kind == PayloadKind::image) {
    c.width = r.u32();
    c.height = r.u32();
    if (c.width < 2 || c.height < 2)
      throw ParseError("container: bad dimensions", r.pos() - 8);
  }
  if (c.mode == QuantMode::delta) r.bytes(c.init_hash.data(), 16);
  const std::uint16_t ntensors = r.u16();
  if (ntensors != static_cast<std::uint16_t>(2 * c.config.linear_layers()))
    throw ParseError("container: tensor count does not match config",
                     r.pos() - 2);
  c.grids.resize(ntensors);
  for (auto& g : c.grids) {
    g.bitwidth = r.u8();
    if (g.bitwidth < 2 || g.bitwidth > 16)
      throw ParseError("container: bad bitwidth", r.pos() - 1);
    g.min_value = static_cast<double>(r.f32());
    g.step = static_cast<double>(r.f32());
    if (!(g.step > 0.0))
      throw ParseError("container: bad quantization step", r.pos() - 4);
  }
  const std::uint64_t payload_bits = r.u64();
  if (payload_bits % 8 != 0)
    throw ParseError("container: payload bit length not byte aligned",
                     r.pos() - 8);
  const std::uint64_t payload_bytes = payload_bits / 8;
  if (payload_bytes != r.remaining())
    throw ParseError("container: payload length mismatch", r.pos());
  c.payload.resize(static_cast<std::size_t>(payload_bytes));
  if (payload_bytes > 0) r.bytes(c.payload.data(), c.payload.size());
  return c;
}

}  // namespace inrc
