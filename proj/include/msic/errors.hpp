#pragma once

#include <stdexcept>
#include <string>

namespace msic {

// Base for every error raised by the toolkit. Callers that only need to
// distinguish "bad data" from "bad usage" can catch Error vs ParamError.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed headers, bad magic, inconsistent section tables.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedSchemeError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Payload shorter or longer than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

// Sample value outside the declared bit depth, or an index overflow.
class RangeError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// A decoder needed a section that is not present (e.g. truncated scalable file).
class MissingSectionError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

// Feature unavailable for this input: preview on a single-layer container,
// external encoder not configured.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ExternalToolError : public Error {
 public:
  using Error::Error;
};

class IncompleteGridError : public Error {
 public:
  using Error::Error;
};

// Parameter outside its admissible range. The CLI maps this to a usage error.
class ParamError : public Error {
 public:
  using Error::Error;
};

}  // namespace msic
