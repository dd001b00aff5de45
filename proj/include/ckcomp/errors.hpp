#pragma once

#include <stdexcept>
#include <string>

namespace ckcomp {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Evaluation outside a function's mathematical domain (ln of a
/// non-positive value, tan at a pole, ...).
struct DomainError : Error {
    using Error::Error;
};

/// Structurally invalid arguments: mismatched jet orders or base points,
/// index out of range, bad dimensions.
struct StructureError : Error {
    using Error::Error;
};

/// Division by a jet with zero value, vanishing first derivative where an
/// inverse is required, singular triangular system.
struct SingularityError : Error {
    using Error::Error;
};

/// A derivative was requested across a kink (abs/sgn at zero).
struct NonSmoothError : Error {
    double location;
    NonSmoothError(const std::string& msg, double where)
        : Error(msg), location(where) {}
};

/// Lexical or syntax error in the expression language; carries a
/// character position (0-based) into the source text.
struct ParseError : Error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg), position(pos) {}
};

/// Invalid run configuration (unknown key, missing block, bad value).
struct ConfigError : Error {
    using Error::Error;
};

/// A numerical procedure failed to converge (Newton inversion, cycle
/// location, ...). The message carries the diagnostic trail.
struct NumericsError : Error {
    using Error::Error;
};

} // namespace ckcomp
