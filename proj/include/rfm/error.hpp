#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace rfm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `offset` is the byte offset into the parsed string.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), message_(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  /// The message without the offset suffix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

/// A named mathematical precondition (C1, D2, "rank deficient", ...) failed.
class PreconditionError : public Error {
 public:
  PreconditionError(std::string condition, const std::string& detail)
      : Error(condition + ": " + detail), condition_(std::move(condition)) {}
  const std::string& condition() const noexcept { return condition_; }

 private:
  std::string condition_;
};

}  // namespace rfm
