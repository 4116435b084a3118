#pragma once

#include <stdexcept>
#include <string>

namespace specx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Combinatorial invariant violated (non-manifold edge, bad orientation, ...).
class TopologyError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometry (zero-area triangle, overlapping holes, ...).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Precondition on an argument violated.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Numerical procedure did not reach its tolerance.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace specx
