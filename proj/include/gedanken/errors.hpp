#pragma once

#include <stdexcept>
#include <string>

namespace gedanken {

// Bad user input: malformed manifest, unknown keys, invalid flags.
// Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical guard refused to produce a result that would be silently
// wrong (temporal wraparound, coherence longer than the representable
// window).  Maps to CLI exit code 2.
class GuardError : public std::runtime_error {
 public:
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

class WindowOverflowError : public GuardError {
 public:
  explicit WindowOverflowError(const std::string& what)
      : GuardError("window overflow: " + what) {}
};

class CoherenceWindowError : public GuardError {
 public:
  CoherenceWindowError() : GuardError("coherence exceeds window") {}
};

// Contract violations inside the library (bad grid, transmission > 1, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace gedanken
