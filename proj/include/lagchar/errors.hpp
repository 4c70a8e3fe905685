#pragma once

#include <stdexcept>
#include <string>

namespace lagchar {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the admissible range of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Left and right states coincide: there is no front to speak of.
class EqualStatesError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Flux fails the uniform convexity check.
class ConvexityError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Entropy/ensemble normalisation mismatch (zero-at-0 vs zero-at-1).
class AnchorError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Sampling window too narrow for the requested horizon.
class WindowError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Scenario/config parse or validation failure. line() is 0 when unknown.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace lagchar
