#pragma once

#include <stdexcept>
#include <string>

namespace centroidkit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The distribution family has no closed-form moment oracle for the request;
/// callers fall back to Monte Carlo.
class NoExactOracle : public Error {
 public:
  using Error::Error;
};

/// A work estimate exceeded a configured resource guard.
class ResourceGuard : public Error {
 public:
  using Error::Error;
};

/// Covariance is singular or too ill-conditioned to invert.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace centroidkit
