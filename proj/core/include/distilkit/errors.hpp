#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace distilkit {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  /// Pipeline stage that raised the error, empty outside staged workflows.
  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  std::string stage_;
};

/// Invalid arguments: bad family parameters, empty sets, mismatched dims.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Requested operator dimension exceeds the configured memory cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling ran past its attempt cap.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Every optimizer restart was degenerate.
class OptimizationError : public Error {
 public:
  using Error::Error;
};

/// Probability mass or other numerical sanity check failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// POVM elements do not span the operator space.
class FrameError : public Error {
 public:
  using Error::Error;
};

/// A post-selection or ratio had (numerically) zero weight.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace distilkit
