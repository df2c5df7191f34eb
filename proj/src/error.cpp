#include "freecircle/error.hpp"

namespace freecircle {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OrderMismatch: return "order-mismatch";
    case ErrorKind::NotInvertible: return "not-invertible";
    case ErrorKind::CompositionDomain: return "composition-domain";
    case ErrorKind::IndexOutOfRange: return "index-out-of-range";
    case ErrorKind::InvalidMeasure: return "invalid-measure";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InsufficientOrder: return "insufficient-order";
    case ErrorKind::STransformUndefined: return "s-transform-undefined";
    case ErrorKind::PhaseUndefined: return "phase-undefined";
    case ErrorKind::WordForm: return "word-form";
    case ErrorKind::ComplexityGuard: return "complexity-guard";
    case ErrorKind::NotApplicable: return "not-applicable";
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace freecircle
