#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace arm::tensor {

// Dense float32 feature map in row-major (height, width, channels) order.
class Tensor {
public:
    Tensor() = default;
    Tensor(int height, int width, int channels, float fill = 0.0f);
    Tensor(int height, int width, int channels, std::vector<float> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    // All channels of one pixel.
    std::span<float> pixel(int y, int x) { return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)}; }
    std::span<const float> pixel(int y, int x) const { return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)}; }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    // Copy of the window [y0, y0+h) x [x0, x0+w); must lie inside the tensor.
    Tensor window(int y0, int x0, int h, int w) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t index(int y, int x, int c) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

} // namespace arm::tensor
