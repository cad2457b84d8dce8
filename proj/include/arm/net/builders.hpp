#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "arm/net/graph.hpp"

namespace arm::net {

struct MiniInceptionConfig {
    int width = 8;            // stem channels; branches use width/2
    int stem_kernel = 3;
    int reduction_stages = 1; // each adds a stride-2 reduction block and another mixed block
    int head_pool = 0;        // final stride-1 average pool window, 0 = none
    int classes = 2;
    std::string objective_tag = "20X";
    bool calibrate = true; // normalize activations on a random input; off for shape-only use
};

// Small Inception-style FCN: stem conv, max pool, mixed blocks of 1x1 / 3x3 /
// double 3x3 / pool branches with crops balancing their extents, and
// stride-2 reduction blocks. All layers use valid padding.
NetGraph build_mini_inception(std::uint64_t seed, const MiniInceptionConfig& config = {});

// Config whose canonical patch is exactly `target_patch` pixels, keeping
// `reduction_stages`; solves for the stem kernel and head pool.
MiniInceptionConfig mini_inception_config_for_patch(int target_patch, int reduction_stages, int width = 8);

// Name of the stem convolution; switching it to 'same' gives the artifact demo variant.
inline constexpr const char* kMiniInceptionStem = "stem/conv";

// 1x1 network scoring each pixel by its L1 RGB distance d to the target:
// likelihood 0.9 at d == tolerance, 0.1 at d == 2*tolerance, monotone in d.
NetGraph build_color_detector(std::array<float, 3> target_rgb, float tolerance, std::string objective_tag = "10X");

} // namespace arm::net
