#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace absnf {

// Base of every error raised by the library. `kind()` is the short tag the
// CLI reports in its JSON error object.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Bad input: malformed documents, dimension mismatches, policy values out of
// range, violated preconditions. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

// Tape document problems, tagged with the offending node where known.
class ParseError : public ValidationError {
 public:
  explicit ParseError(const std::string& what, std::optional<std::size_t> node = std::nullopt)
      : ValidationError(node ? "node " + std::to_string(*node) + ": " + what : what), node_(node) {}
  const char* kind() const noexcept override { return "parse"; }
  std::optional<std::size_t> node() const noexcept { return node_; }

 private:
  std::optional<std::size_t> node_;
};

// A guarded elementary operation was evaluated outside its domain.
class DomainError : public ValidationError {
 public:
  DomainError(const std::string& what, std::size_t node)
      : ValidationError("node " + std::to_string(node) + ": " + what), node_(node) {}
  const char* kind() const noexcept override { return "domain"; }
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

// Combinatorial guard: the requested enumeration exceeds the configured cap.
class CapExceeded : public ValidationError {
 public:
  using ValidationError::ValidationError;
  const char* kind() const noexcept override { return "cap_exceeded"; }
};

// A mathematical precondition (e.g. LIKQ) does not hold at the given point.
class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
  const char* kind() const noexcept override { return "precondition"; }
};

// A numerical self-check failed or an iteration diverged. CLI exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

// Finite-difference stencil straddles a kink.
class KinkCrossingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "kink_crossing"; }
};

}  // namespace absnf
