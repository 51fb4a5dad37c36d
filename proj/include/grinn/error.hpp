#pragma once

#include <stdexcept>
#include <string>

namespace grinn {

enum class ErrorKind {
  invalid_domain,
  unknown_case,
  invalid_config,
  regime,
  singular_mode,
  unsupported_regime,
  solver_failure,
  positivity_failure,
  evaluation,
  training_failure,
  shape,
  fit_failure,
  query,
  parse,
  io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated so the CLI can emit a machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace grinn
