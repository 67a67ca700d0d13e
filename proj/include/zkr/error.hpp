#pragma once

#include <stdexcept>
#include <string>

namespace zkr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// The payload is truncated or does not decode to a valid graph.
class CorruptStream : public Error {
 public:
  using Error::Error;
};

// Bad magic, version, parameters or distribution tables. A header problem is
// also a corrupt stream.
class CorruptHeader : public CorruptStream {
 public:
  using CorruptStream::CorruptStream;
};

// Malformed textual or binary graph input.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A Graph that violates its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The container does not support the requested operation (e.g. random
// access into a full-mode file).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Node id or argument out of range.
class RangeError : public Error {
 public:
  using Error::Error;
};

}  // namespace zkr
