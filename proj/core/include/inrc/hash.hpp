// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace inrc {

using Digest128 = std::array<std::uint8_t, 16>;

/// MurmurHash3 x64 128-bit (Appleby's public-domain finalizer), used for
/// content-addressing meta initializations. Not cryptographic.
Digest128 murmur3_x64_128(const void* data, std::size_t len,
                          std::uint32_t seed = 0);

std::string digest_hex(const Digest128& d);

}  // namespace inrc
