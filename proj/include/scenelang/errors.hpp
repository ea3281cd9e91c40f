#pragma once

#include <stdexcept>
#include <string>

namespace scenelang {

// Base class for every error raised by this library. The CLI maps these to
// exit codes: IoError -> 3, ProviderError -> 4, everything else -> 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input file is structurally wrong (missing field, wrong type).
struct SchemaError : Error {
    using Error::Error;
};

// Input is well-formed but violates a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem read/write failure.
struct IoError : Error {
    using Error::Error;
};

// Synthetic-scene packing gave up after the attempt budget.
struct PlacementError : Error {
    using Error::Error;
};

// Direction vector has no usable horizontal component.
struct DegenerateDirection : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct EmptyCaption : Error {
    using Error::Error;
};

// Remote provider failed (timeout, malformed response). Never swallowed.
struct ProviderError : Error {
    using Error::Error;
};

struct UnknownId : Error {
    using Error::Error;
};

struct MissingCaption : Error {
    using Error::Error;
};

struct InvalidK : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

} // namespace scenelang
