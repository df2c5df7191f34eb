#pragma once

#include <stdexcept>
#include <string>

namespace freecircle {

enum class ErrorKind {
  OrderMismatch,
  NotInvertible,
  CompositionDomain,
  IndexOutOfRange,
  InvalidMeasure,
  Domain,
  InsufficientOrder,
  STransformUndefined,
  PhaseUndefined,
  WordForm,
  ComplexityGuard,
  NotApplicable,
  InvalidSpec,
  Budget,
  Config,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers and tests
// dispatch on the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace freecircle
