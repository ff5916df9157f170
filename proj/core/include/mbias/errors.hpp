#pragma once

#include <stdexcept>
#include <string>

namespace mbias {

/// Base of every error raised by the estimators. `code()` is a stable
/// machine-readable tag (written into CLI error reports).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what);

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Error matrix is singular or its condition estimate exceeds the cap.
class SingularError : public Error {
 public:
  explicit SingularError(const std::string& what) : Error("singular", what) {}
};

/// Observed data and the postulated error mechanism cannot both hold:
/// restoration produced probabilities outside [0, 1].
class IncompatibleModelError : public Error {
 public:
  explicit IncompatibleModelError(const std::string& what)
      : Error("incompatible", what) {}
};

class PositivityError : public Error {
 public:
  explicit PositivityError(const std::string& what) : Error("positivity", what) {}
};

class DegenerateStratumError : public Error {
 public:
  explicit DegenerateStratumError(const std::string& what)
      : Error("degenerate_stratum", what) {}
};

class DegenerateDenominatorError : public Error {
 public:
  explicit DegenerateDenominatorError(const std::string& what)
      : Error("degenerate_denominator", what) {}
};

class UnidentifiableError : public Error {
 public:
  explicit UnidentifiableError(const std::string& what)
      : Error("unidentifiable", what) {}
};

class InvalidErrorVarianceError : public Error {
 public:
  explicit InvalidErrorVarianceError(const std::string& what)
      : Error("invalid_error_variance", what) {}
};

/// Dense expansion of a factored error matrix would exceed the size cap.
class DimensionCapError : public Error {
 public:
  explicit DimensionCapError(const std::string& what)
      : Error("dimension_cap", what) {}
};

/// Malformed input: wrong shapes, values out of range, missing fields.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error("invalid_argument", what) {}
};

}  // namespace mbias
