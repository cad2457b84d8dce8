#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "arm/net/geometry.hpp"
#include "arm/tensor/tensor.hpp"

namespace arm::infer {

// Likelihood grid registered to FOV pixels through `geometry`.
struct Heatmap {
    int rows = 0;
    int cols = 0;
    std::vector<float> values;
    net::GridGeometry geometry;
    std::uint64_t source_fov_seq = 0;

    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    bool empty() const noexcept { return values.empty(); }
};

// Picks the last channel of a network output (the positive class) as the heatmap.
Heatmap heatmap_from_output(const tensor::Tensor& output, const net::GridGeometry& geometry, std::uint64_t seq = 0);

// 16-bit grayscale PNG plus a JSON sidecar (<stem>.geometry.json) with the grid geometry.
void export_heatmap(const Heatmap& h, const std::filesystem::path& png_path);
Heatmap import_heatmap(const std::filesystem::path& png_path);

} // namespace arm::infer
