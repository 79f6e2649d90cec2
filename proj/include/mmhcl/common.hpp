#pragma once

#include <stdexcept>
#include <string>

namespace mmhcl {

// Error taxonomy. The CLI maps ConfigError (and ParamError, which signals a
// bad value that ultimately came from configuration) to exit code 2, and the
// DataError family to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension mismatch between containers that must agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A scalar or structural argument outside its documented domain.
class ParamError : public Error {
public:
    using Error::Error;
};

// Input data violates a contract (negative weights, duplicate entries, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// A file on disk is not in the expected format.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// Filesystem-level failure (missing file, short read, unwritable path).
class IoError : public DataError {
public:
    using DataError::DataError;
};

// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mmhcl
