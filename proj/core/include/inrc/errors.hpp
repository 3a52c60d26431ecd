// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inrc {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (shape mismatch, bad range).
struct ContractError : Error {
  using Error::Error;
};

/// Coordinate grid with a side of length 1 (the grid formula divides by n-1).
struct DegenerateGridError : ContractError {
  using ContractError::ContractError;
};

/// Training produced a non-finite loss or intermediate value.
struct DivergedError : Error {
  DivergedError(const std::string& what, long epoch_index)
      : Error(what + " (epoch " + std::to_string(epoch_index) + ")"),
        epoch(epoch_index) {}
  long epoch;
};

/// Malformed byte stream. `offset` points at the offending byte.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

struct BadMagicError : ParseError {
  using ParseError::ParseError;
};

struct BadVersionError : ParseError {
  using ParseError::ParseError;
};

/// Stored content hash does not match the recomputed one.
struct HashMismatchError : ParseError {
  using ParseError::ParseError;
};

/// A delta-mode container references an initialization the registry lacks.
struct MissingInitError : Error {
  using Error::Error;
};

/// Inside/outside classification is unreliable (mesh is not watertight).
struct SignAmbiguityError : Error {
  using Error::Error;
};

/// Isosurface extraction found no zero crossing.
struct EmptySurfaceError : Error {
  using Error::Error;
};

/// Filesystem-level failure (open/read/write).
struct IoError : Error {
  using Error::Error;
};

}  // namespace inrc
