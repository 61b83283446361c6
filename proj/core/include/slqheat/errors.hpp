#pragma once
#include <stdexcept>

namespace slqheat {

// Error taxonomy used across the library:
//  - InvalidArgument: caller passed data violating a documented precondition.
//  - InvalidState:    objects combined inconsistently, e.g. operators
//                     factorized for a different time step than the grid in use.
//  - ResourceLimit:   request exceeds a hard safety cap (exhaustive trees).
//  - InternalError:   a "cannot happen" condition; indicates a library bug.
//  - ConfigError:     malformed or inconsistent experiment configuration.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
  using Error::Error;
};
struct InvalidState : Error {
  using Error::Error;
};
struct ResourceLimit : Error {
  using Error::Error;
};
struct InternalError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace slqheat
