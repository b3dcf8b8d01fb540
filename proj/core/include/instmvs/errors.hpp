#pragma once

#include <stdexcept>
#include <string>

namespace instmvs {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that is malformed or inconsistent (files, rasters, specs).
class DataError : public Error {
 public:
  using Error::Error;
};

class NonPositiveDepth : public Error {
 public:
  using Error::Error;
};

class BehindCamera : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class EmptyMask : public DataError {
 public:
  using DataError::DataError;
};

class NoValidDepth : public Error {
 public:
  using Error::Error;
};

class DegenerateRange : public Error {
 public:
  DegenerateRange(const std::string& what, double value) : Error(what), value_(value) {}

  // The single depth value the collapsed range sits on.
  double value() const { return value_; }

 private:
  double value_;
};

class EmptyCloud : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSpec : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace instmvs
