#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace colcrunch {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated codec input.
class CodecError : public Error {
 public:
  CodecError(std::string codec, std::size_t offset, const std::string& what)
      : Error(codec + " decode error at byte " + std::to_string(offset) + ": " + what),
        codec_(std::move(codec)),
        offset_(offset) {}

  const std::string& codec() const noexcept { return codec_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string codec_;
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad on-disk or text format (column file header, catalog, CSV).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A bounded resource (buffer slots, join build memory) is exhausted.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an API contract (double unpin, out-of-range page, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class TypeError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace colcrunch
