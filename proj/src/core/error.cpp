#include "wgn/error.hpp"

namespace wgn {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidLayout: return "invalid-layout";
        case ErrorKind::Catalog: return "catalog";
        case ErrorKind::Config: return "config";
        case ErrorKind::Data: return "data";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Metric: return "metric";
        case ErrorKind::Ingestion: return "ingestion";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Report: return "report";
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace wgn
