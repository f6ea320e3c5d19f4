#pragma once

#include <stdexcept>
#include <string>

namespace sshmc {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hierarchy construction / queries.
struct CycleError : Error {
    using Error::Error;
};
struct LengthMismatchError : Error {
    using Error::Error;
};
struct IndexError : Error {
    using Error::Error;
};
struct EmptyHierarchyError : Error {
    using Error::Error;
};

// File ingestion. Messages carry "<path>:<line>: <what>" where applicable.
struct ParseError : Error {
    using Error::Error;
};
struct UnknownLabelError : ParseError {
    using ParseError::ParseError;
};

// Classifier plumbing.
struct WidthMismatchError : Error {
    using Error::Error;
};
struct ShapeMismatchError : Error {
    using Error::Error;
};
struct RangeError : Error {
    using Error::Error;
};

// Neighbor search and similitude.
struct PoolTooSmallError : Error {
    using Error::Error;
};
struct TooFewPointsError : Error {
    using Error::Error;
};

// Evaluation.
struct EmptyTruthError : Error {
    using Error::Error;
};
struct UnsupportedAlphaError : Error {
    using Error::Error;
};
struct DegenerateError : Error {
    using Error::Error;
};

}  // namespace sshmc
