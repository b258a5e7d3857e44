#pragma once

#include <stdexcept>
#include <string>

namespace texrd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input documents (manifest, CSV, JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

// Inputs that parse but violate a documented invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Singular systems, empty overlaps, degenerate statistics.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace texrd
