#include "arm/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "arm/common/error.hpp"

namespace arm::tensor {

namespace {

void check_dims(int height, int width, int channels)
{
    if (height <= 0 || width <= 0 || channels <= 0) {
        throw Error(ErrorCode::InvalidArgument,
                    "tensor dimensions must be positive, got " + std::to_string(height) + "x" +
                        std::to_string(width) + "x" + std::to_string(channels));
    }
}

} // namespace

Tensor::Tensor(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels)
{
    check_dims(height, width, channels);
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Tensor::Tensor(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data))
{
    check_dims(height, width, channels);
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw Error(ErrorCode::ShapeMismatch, "tensor data length does not match height*width*channels");
    }
}

Tensor Tensor::window(int y0, int x0, int h, int w) const
{
    if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > height_ || x0 + w > width_) {
        throw Error(ErrorCode::OutOfBounds, "window outside tensor");
    }
    Tensor out(h, w, channels_);
    const std::size_t row = static_cast<std::size_t>(w) * channels_;
    for (int y = 0; y < h; ++y) {
        auto src = data_.begin() + static_cast<std::ptrdiff_t>(index(y0 + y, x0, 0));
        std::copy_n(src, row, out.data_.begin() + static_cast<std::ptrdiff_t>(y * row));
    }
    return out;
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

} // namespace arm::tensor
