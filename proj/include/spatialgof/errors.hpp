#ifndef SPATIALGOF_ERRORS_HPP
#define SPATIALGOF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spatialgof {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error(what) {}
};

class DegenerateDesign : public Error {
 public:
  explicit DegenerateDesign(const std::string& what) : Error(what) {}
};

/// Raised when a local linear system is singular at an evaluation point,
/// i.e. the bandwidth is too small for that location.
class InsufficientLocalData : public Error {
 public:
  explicit InsufficientLocalData(const std::string& what) : Error(what) {}
};

class VariogramFitFailed : public Error {
 public:
  explicit VariogramFitFailed(const std::string& what) : Error(what) {}
};

class NoPairsInRange : public Error {
 public:
  explicit NoPairsInRange(const std::string& what) : Error(what) {}
};

class NonpositiveVariance : public Error {
 public:
  explicit NonpositiveVariance(const std::string& what) : Error(what) {}
};

class BootstrapDegenerate : public Error {
 public:
  explicit BootstrapDegenerate(const std::string& what) : Error(what) {}
};

class UnsupportedOrder : public Error {
 public:
  explicit UnsupportedOrder(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace spatialgof

#endif  // SPATIALGOF_ERRORS_HPP
