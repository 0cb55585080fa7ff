#pragma once

#include <stdexcept>
#include <string>

namespace shaperec {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input payload (PGM, JSON, model archive).
struct ParseError : Error {
    using Error::Error;
};

/// Input violates a pipeline precondition (multi-object image, hole-count
/// mismatch, degenerate contour, ...).
struct InputError : Error {
    using Error::Error;
};

}  // namespace shaperec
