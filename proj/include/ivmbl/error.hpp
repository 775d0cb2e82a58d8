#ifndef IVMBL_ERROR_HPP_
#define IVMBL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ivmbl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data (bad CSV rows, non-binary flags, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The data do not support the requested estimate (empty cell, non-positive
/// complier share, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivmbl

#endif  // IVMBL_ERROR_HPP_
