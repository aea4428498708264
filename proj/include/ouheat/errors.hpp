#pragma once

#include <stdexcept>
#include <string>

namespace ouheat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, grid or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unusable observations: empty, degenerate, malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A CDF evaluation could not meet its accuracy contract.
class CdfError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ouheat
