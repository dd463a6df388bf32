#pragma once

#include <stdexcept>
#include <string>

namespace dvis {

// Base for all library errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not line up (map sizes, tensor dims, strides).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a function (negative Huber input, bad config).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (file formats, GT without classes).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during training or a failed gradient check.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dvis
