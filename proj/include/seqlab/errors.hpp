#pragma once

#include <stdexcept>
#include <string>

namespace seqlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input, mismatched operands, invalid parameters.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A finite input source (strategy bit file) ran out.
class SourceExhaustedError : public UsageError {
public:
    using UsageError::UsageError;
};

/// A query asked for more bits than the precision budget guarantees.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// A digit source could not supply the requested number of bits.
class PrecisionSourceError : public PrecisionError {
public:
    using PrecisionError::PrecisionError;
};

/// A result failed its own verification. Always an implementation bug.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace seqlab
