#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wgn {

enum class ErrorKind {
    InvalidLayout,
    Catalog,
    Config,
    Data,
    InsufficientData,
    Numeric,
    Metric,
    Ingestion,
    Schema,
    Report,
    Usage,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind selects
/// the CLI exit code and the machine-readable error tag.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace wgn
