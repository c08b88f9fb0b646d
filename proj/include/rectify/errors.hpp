#pragma once

#include <stdexcept>
#include <string>

namespace rectify {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the valid domain of a function family.
struct DomainError : Error {
    using Error::Error;
};

struct InvalidParam : Error {
    using Error::Error;
};

// A scanned cube contains no points; signals a covering radius too large
// for the cube side, or a bad reference density.
struct EmptyCube : Error {
    using Error::Error;
};

struct DepthOverflow : Error {
    using Error::Error;
};

// Box-map ratio outside the range the tent construction supports.
struct SplitRequired : Error {
    using Error::Error;
};

// The fan solve produced a non-positive orientation.
struct DegenerateFan : Error {
    using Error::Error;
};

struct OutOfWindow : Error {
    using Error::Error;
};

struct Infeasible : Error {
    using Error::Error;
};

struct QuadratureFailure : Error {
    using Error::Error;
};

} // namespace rectify
