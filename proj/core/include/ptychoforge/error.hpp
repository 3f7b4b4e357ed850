#pragma once

#include <stdexcept>
#include <string>

namespace ptychoforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or parameters, detected before any work is done.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ptychoforge
