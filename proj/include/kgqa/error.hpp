#pragma once

#include <stdexcept>
#include <string>

namespace kgqa {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A file could not be opened or read.
struct IoError : Error {
    using Error::Error;
};

} // namespace kgqa
