#pragma once

#include <stdexcept>
#include <string>

namespace ivegan {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between tensors/layers.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid numeric content (NaN/Inf, out-of-range parameter).
struct ValueError : Error {
    using Error::Error;
};

// Filesystem / format failures.
struct IoError : Error {
    using Error::Error;
};

// Bad run configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace ivegan
