#pragma once

#include <stdexcept>
#include <string>

namespace lsr {

// Domain error kinds named by the operation contracts.

struct NoMatchingLayoutError : std::runtime_error {
    explicit NoMatchingLayoutError(const std::string& m) : std::runtime_error(m) {}
};

struct ReferenceGapError : std::runtime_error {
    explicit ReferenceGapError(const std::string& m) : std::runtime_error(m) {}
};

struct UndefinedCorrelationError : std::runtime_error {
    explicit UndefinedCorrelationError(const std::string& m) : std::runtime_error(m) {}
};

// Layout file problems carry the offending field path, e.g. "boxes[2].x".
struct LayoutSchemaError : std::runtime_error {
    std::string field;
    LayoutSchemaError(const std::string& f, const std::string& m)
        : std::runtime_error(m + " (at " + f + ")"), field(f) {}
};

struct LayoutInvariantError : std::runtime_error {
    std::string field;
    LayoutInvariantError(const std::string& f, const std::string& m)
        : std::runtime_error(m + " (at " + f + ")"), field(f) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

} // namespace lsr
