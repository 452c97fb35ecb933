#pragma once

#include <stdexcept>
#include <string>

namespace aicfc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Input record that does not follow the expected schema.
class FormatError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class CorruptStore : public Error {
public:
    using Error::Error;
};

/// Remote endpoint failure after retries are exhausted.
class EndpointError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public EndpointError {
public:
    using EndpointError::EndpointError;
};

} // namespace aicfc
