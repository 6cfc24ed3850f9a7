#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmpt {

using PointId = std::size_t;

enum class ErrorKind {
    Schema,          // malformed or incomplete input document
    Validation,      // a mathematical invariant of the input does not hold
    InvalidArgument, // precondition of an operation violated
    CapExhausted,    // index search ran past its configured cap
    Unsupported,
};

/// Error carrying a category so front ends can map it onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace mmpt
