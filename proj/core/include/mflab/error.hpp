#pragma once

#include <stdexcept>
#include <string>

namespace mflab {

// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  parameter,
  shape,
  capacity,
  convergence,
  truncation,
  divergence,
  undefined_density,
  config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define MFLAB_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

MFLAB_DEFINE_ERROR(ParameterError, parameter);
MFLAB_DEFINE_ERROR(ShapeError, shape);
MFLAB_DEFINE_ERROR(CapacityError, capacity);
MFLAB_DEFINE_ERROR(ConvergenceError, convergence);
MFLAB_DEFINE_ERROR(TruncationError, truncation);
MFLAB_DEFINE_ERROR(DivergenceError, divergence);
MFLAB_DEFINE_ERROR(UndefinedDensityError, undefined_density);
MFLAB_DEFINE_ERROR(ConfigError, config);

#undef MFLAB_DEFINE_ERROR

/// Rethrows `e` as the same concrete type with `prefix` prepended to the message.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& prefix) {
  const std::string what = prefix + e.what();
  switch (e.kind()) {
    case ErrorKind::parameter: throw ParameterError(what);
    case ErrorKind::shape: throw ShapeError(what);
    case ErrorKind::capacity: throw CapacityError(what);
    case ErrorKind::convergence: throw ConvergenceError(what);
    case ErrorKind::truncation: throw TruncationError(what);
    case ErrorKind::divergence: throw DivergenceError(what);
    case ErrorKind::undefined_density: throw UndefinedDensityError(what);
    case ErrorKind::config: throw ConfigError(what);
  }
  throw Error(e.kind(), what);
}

}  // namespace mflab
