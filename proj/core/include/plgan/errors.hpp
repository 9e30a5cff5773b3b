#pragma once

#include <stdexcept>
#include <string>

namespace plgan {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user-supplied configuration: unknown key, invalid enum value, bad flag.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable/inconsistent input data: missing files, malformed JSON, bad masks.
class DataError : public Error {
public:
    using Error::Error;
};

/// Tensor dimension mismatch or violated shape precondition.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite value where one is not allowed (training abort path).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace plgan
