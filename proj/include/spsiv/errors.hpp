#pragma once

#include <stdexcept>
#include <string>

namespace spsiv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimensions, non-finite entries, bad bounds.
class InputError : public Error {
 public:
  using Error::Error;
};

class NotPositiveSemidefinite : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// The instrument/regressor design violates the invertibility requirement
/// on H_n or V_n.
class SingularDesign : public Error {
 public:
  using Error::Error;
};

class SimulationDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace spsiv
