#pragma once

#include <stdexcept>
#include <string>

namespace jointgibbs {

/// Invalid model specification, formula or run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside the MCMC engine (NaN target, non-PD matrix, ...).
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jointgibbs
