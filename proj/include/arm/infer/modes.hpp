#pragma once

#include <cstdint>

#include "arm/infer/executor.hpp"
#include "arm/infer/heatmap.hpp"

namespace arm::infer {

// Single forward pass over the whole FOV. Requires an FCN-safe graph.
Heatmap run_fcn(const CompiledNet& net, const tensor::Tensor& fov);

// Full-size single pass that ignores padding safety (the naive FCN).
Heatmap run_naive_fcn(const CompiledNet& net, const tensor::Tensor& fov);

struct SlidingOptions {
    int stride = 0;     // input pixels between patches; 0 = the output stride j
    int tile_cells = 1; // output cells per patch side; >1 steps by tile_cells * j
    int threads = 1;
};

// Crops patches, runs each, and places the results in grid order. With
// tile_cells == 1 and stride == j this is the reference the FCN must match.
Heatmap run_sliding_window(const CompiledNet& net, const tensor::Tensor& fov, const SlidingOptions& options = {});

// Number of patches a sliding-window run performs.
std::uint64_t sliding_patch_count(const CompiledNet& net, int fov_side, const SlidingOptions& options = {});

struct EquivalenceReport {
    double max_abs_diff = 0.0;
    bool pass = false;
    int trials = 0;
    int grid_side = 0;
};

inline constexpr double kEquivalenceTolerance = 1e-4;

// Naive full-size pass vs sliding window on `trials` random FOVs.
EquivalenceReport check_equivalence(const CompiledNet& net, int fov_side, int trials, std::uint64_t seed = 0,
                                    int tile_cells = 1);

// |naive full-size - sliding window| per grid cell. Tiles of `tile_cells`
// outputs reproduce the patch tiling the model would see during training.
Heatmap artifact_map(const CompiledNet& net, const tensor::Tensor& fov, int tile_cells = 4);

tensor::Tensor random_fov(int side, int channels, std::uint64_t seed);

} // namespace arm::infer
