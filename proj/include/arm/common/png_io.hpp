#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "arm/tensor/tensor.hpp"

namespace arm {

// 8-bit RGB PNG from a 3-channel tensor with values in [0,1] (clamped).
std::vector<std::uint8_t> encode_png_rgb8(const tensor::Tensor& rgb);
// 16-bit grayscale PNG from row-major values in [0,1] (clamped).
std::vector<std::uint8_t> encode_png_gray16(int height, int width, const std::vector<float>& values);

// Any PNG (gray/RGB/RGBA, 8/16-bit) to a 3-channel tensor in [0,1].
tensor::Tensor decode_png_rgb(const std::vector<std::uint8_t>& bytes);
// 16-bit grayscale PNG back to [0,1] values; returns {height, width}.
std::pair<int, int> decode_png_gray16(const std::vector<std::uint8_t>& bytes, std::vector<float>& values);

void write_png_rgb8(const std::filesystem::path& path, const tensor::Tensor& rgb);
tensor::Tensor read_png_rgb(const std::filesystem::path& path);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

} // namespace arm
