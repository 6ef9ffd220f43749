#pragma once

#include <stdexcept>
#include <string>

namespace resmeth {

// Malformed arguments: non-finite entries, dimension mismatch, bad exponent.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedExponent : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// A brute-force routine was asked for more work than its cap allows.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConstructionFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace resmeth
