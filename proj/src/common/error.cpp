#include "arm/common/error.hpp"

namespace arm {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::ChannelMismatch: return "channel-mismatch";
    case ErrorCode::WindowTooLarge: return "window-too-large";
    case ErrorCode::CropExhausted: return "crop-exhausted";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::DanglingInput: return "dangling-input";
    case ErrorCode::CycleDetected: return "cycle-detected";
    case ErrorCode::GraphUnsafe: return "graph-unsafe";
    case ErrorCode::InputTooSmall: return "input-too-small";
    case ErrorCode::BadStride: return "bad-stride";
    case ErrorCode::OutOfBounds: return "out-of-bounds";
    case ErrorCode::OddDimensions: return "odd-dimensions";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::SingleClass: return "single-class";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

} // namespace arm
