#pragma once

#include <stdexcept>
#include <string>

namespace audiosr {

// Failure classes surfaced by the command-line front end. Shape and argument
// violations use std::invalid_argument directly.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : IoError {
    using IoError::IoError;
};

// NaN/Inf in a forward value or a training loss.
struct NonFiniteError : Error {
    using Error::Error;
};

}  // namespace audiosr
