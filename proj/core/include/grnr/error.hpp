#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grnr {

enum class ErrorKind {
    Input,           // undecodable / unreadable input data
    Config,          // invalid configuration or missing model outputs
    Argument,        // invalid function argument (bounds, sizes)
    Backend,         // neural-network backend failure
    Format,          // malformed .fmap or other structured file
    Io,              // filesystem read/write failure
    Numerical,       // singular system and similar
    Dataset,         // dataset layout problems
    MetricUndefined, // e.g. AUROC with a single class
    Serialization,   // report values that cannot be serialized
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace grnr
