#include "wmdx/error.hpp"

namespace wmdx {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidMeasure: return "InvalidMeasure";
        case ErrorKind::NonfiniteCost: return "NonfiniteCost";
        case ErrorKind::InstanceTooLarge: return "InstanceTooLarge";
        case ErrorKind::OutsideBall: return "OutsideBall";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::ZeroNormWord: return "ZeroNormWord";
        case ErrorKind::MalformedLine: return "MalformedLine";
        case ErrorKind::InconsistentDimension: return "InconsistentDimension";
        case ErrorKind::EmptyFile: return "EmptyFile";
        case ErrorKind::TruncatedFile: return "TruncatedFile";
        case ErrorKind::HeaderParseError: return "HeaderParseError";
        case ErrorKind::EmptyDocument: return "EmptyDocument";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::MissingIdf: return "MissingIdf";
        case ErrorKind::KTooLarge: return "KTooLarge";
        case ErrorKind::InsufficientClassSize: return "InsufficientClassSize";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Internal: return "Internal";
    }
    return "Unknown";
}

} // namespace wmdx
