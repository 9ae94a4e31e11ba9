#include "grnr/error.hpp"

namespace grnr {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Input: return "input error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Argument: return "argument error";
        case ErrorKind::Backend: return "backend error";
        case ErrorKind::Format: return "format error";
        case ErrorKind::Io: return "I/O error";
        case ErrorKind::Numerical: return "numerical error";
        case ErrorKind::Dataset: return "dataset error";
        case ErrorKind::MetricUndefined: return "metric undefined";
        case ErrorKind::Serialization: return "serialization error";
    }
    return "error";
}

}  // namespace grnr
