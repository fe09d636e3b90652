#pragma once

#include <stdexcept>
#include <string>

namespace sspnp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton iteration failed (damping exhausted or iteration cap reached).
class NonConvergence : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public NonConvergence {
 public:
  using NonConvergence::NonConvergence;
};

class MeshBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositiveScale : public Error {
 public:
  using Error::Error;
};

class NeutralityViolated : public Error {
 public:
  using Error::Error;
};

class InvalidFormulation : public Error {
 public:
  using Error::Error;
};

class InvalidSystem : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class OddFoldCount : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sspnp
