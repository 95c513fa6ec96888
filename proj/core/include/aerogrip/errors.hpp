#pragma once

#include <stdexcept>
#include <string>

namespace aerogrip {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File could not be opened / read / written.
struct IoError : Error {
    using Error::Error;
};

// Malformed input file. Carries the path and 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string& path, long line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), path(path), line(line) {}
    std::string path;
    long line;
};

// Model bundle structure problems.
struct SchemaError : Error {
    using Error::Error;
};
struct VersionError : Error {
    using Error::Error;
};

// Violated preconditions / degenerate geometry.
struct DomainError : Error {
    using Error::Error;
};
struct DegenerateNeighborhood : DomainError {
    using DomainError::DomainError;
};
struct FitFailure : DomainError {
    using DomainError::DomainError;
};
struct NoContact : DomainError {
    using DomainError::DomainError;
};
struct EmptyInput : DomainError {
    using DomainError::DomainError;
};
struct NoFeatures : DomainError {
    using DomainError::DomainError;
};
struct AllZeroWeights : DomainError {
    using DomainError::DomainError;
};
struct DimensionMismatch : DomainError {
    using DomainError::DomainError;
};

}  // namespace aerogrip
