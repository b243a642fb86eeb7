#pragma once

#include <stdexcept>
#include <string>

namespace udn {

/// Base class for every failure raised by the coordination library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An assignment or group breaks a pairing/partitioning constraint.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

/// The requested problem exceeds an exact solver's size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// No assignment can exist for the request (e.g. pigeonhole on a shared AN).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical method failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace udn
