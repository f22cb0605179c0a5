#pragma once

#include <stdexcept>
#include <string>

namespace ufkm {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension or layout mismatch between operands.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid configuration value or argument.
struct ConfigError : Error {
    using Error::Error;
};

/// Numerically degenerate input (singular, non-finite, all-zero).
struct NumericError : Error {
    using Error::Error;
};

/// File parse or serialization failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace ufkm
