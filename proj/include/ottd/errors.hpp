#pragma once

#include <stdexcept>
#include <string>

namespace ottd {

// Error categories carried by every exception the library throws.
// The CLI maps them onto process exit codes.
enum class ErrorKind {
  invalid_input,
  shape,
  singular_system,
  multiplicity,
  coverage,
  degenerate_model,
  degenerate_data,
  degenerate_features,
  precondition,
  nonexistence,
  io,
  schema,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::shape: return "shape";
    case ErrorKind::singular_system: return "singular-system";
    case ErrorKind::multiplicity: return "multiplicity";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::degenerate_model: return "degenerate-model";
    case ErrorKind::degenerate_data: return "degenerate-data";
    case ErrorKind::degenerate_features: return "degenerate-features";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::nonexistence: return "nonexistence";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ottd
