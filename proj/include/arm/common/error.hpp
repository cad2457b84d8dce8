#pragma once

#include <stdexcept>
#include <string>

namespace arm {

enum class ErrorCode {
    ShapeMismatch,
    ChannelMismatch,
    WindowTooLarge,
    CropExhausted,
    ParseError,
    DanglingInput,
    CycleDetected,
    GraphUnsafe,
    InputTooSmall,
    BadStride,
    OutOfBounds,
    OddDimensions,
    NotFound,
    SingleClass,
    EmptyInput,
    InvalidArgument,
    Io,
};

const char* to_string(ErrorCode code);

// Single exception type for the whole library; callers switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace arm
