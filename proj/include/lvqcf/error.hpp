#pragma once

#include <stdexcept>
#include <string>

namespace lvqcf {

// Caller passed something that violates an operation's precondition
// (dimension mismatch, bad index, malformed request).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A file or document failed to parse or failed schema validation. The
// message names the offending field, row or line.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An operation was invoked on an object it is not defined for, e.g.
// linear nearest-prototype constraints on a local-metric model.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace lvqcf
