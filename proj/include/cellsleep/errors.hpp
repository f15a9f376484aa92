#pragma once

#include <stdexcept>
#include <string>

namespace cellsleep {

// Raised when a caller breaks an operation's precondition (sleeping BS asked
// to serve, ZF infeasible load, action outside the 12-element space, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or unreadable configuration. `path` names the offending field
// (JSON-pointer style) when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Internal simulator invariant failed at runtime.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stored model does not fit the configured network.
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite losses or logits, or a diverging run.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cellsleep
