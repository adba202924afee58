#ifndef WMDX_ERROR_HPP
#define WMDX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace wmdx {

enum class ErrorKind {
    DimensionMismatch,
    InvalidMeasure,
    NonfiniteCost,
    InstanceTooLarge,
    OutsideBall,
    ZeroVector,
    ZeroNormWord,
    MalformedLine,
    InconsistentDimension,
    EmptyFile,
    TruncatedFile,
    HeaderParseError,
    EmptyDocument,
    EmptyCorpus,
    MissingIdf,
    KTooLarge,
    InsufficientClassSize,
    IoError,
    InvalidArgument,
    Internal,
};

const char* error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace wmdx

#endif
