#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arm/net/graph.hpp"

namespace arm::net {

// Alignment contract between an output grid and input pixels. Output index i
// reads the input window [window_start + i*stride, window_start + i*stride + rf).
struct GridGeometry {
    int receptive_field_px = 1; // r
    int output_stride_px = 1;   // j
    int offset_px = 0;          // o: center pixel of the window feeding output 0 (floored)
    int canonical_patch_px = 1; // p: input side giving exactly a 1x1 output
    int window_start_px = 0;

    // Output cells along one axis for an input of `side` pixels (0 when too small).
    int output_cells(int side) const noexcept;
    // Continuous pixel coordinate of cell i's center (pixel k spans [k, k+1)).
    double cell_center(int i) const noexcept;

    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct Violation {
    std::string layer;
    std::string rule; // same-padding | branch-stride-mismatch | branch-extent-mismatch | branch-alignment-mismatch
    std::string detail;
};

// Per-node window bookkeeping: outputs of a node cover windows starting at
// `start + i*stride` of extent `field`, and the node needs `tail` extra pixels
// beyond the last window (from crops). Total span = start + field + tail.
struct NodeExtent {
    int start = 0;
    int field = 1;
    int stride = 1;
    int tail = 0;

    int span() const noexcept { return start + field + tail; }
    // Twice the window center; equal for aligned branches.
    int center2() const noexcept { return 2 * start + field - 1; }
};

std::vector<Violation> validate_fcn_safe(const NetGraph& g);

// Geometry of an FCN-safe graph; throws GraphUnsafe otherwise.
GridGeometry compute_geometry(const NetGraph& g);

// Geometry treating stride-1 'same' layers as size-preserving. This is the
// tiling a same-padded model was trained with; used to drive sliding-window
// execution and naive full-size runs of unsafe graphs.
GridGeometry nominal_geometry(const NetGraph& g);

std::vector<NodeExtent> node_extents(const NetGraph& g);

struct LayerShape {
    int height = 0;
    int width = 0;
    int channels = 0;
};

// Propagates a square input through the graph; throws like the kernels would.
std::vector<LayerShape> infer_shapes(const NetGraph& g, int input_h, int input_w);

// Multiply-adds for conv, one op per output element for pool/affine/head;
// concat, crop and input are free.
std::uint64_t count_flops(const NetGraph& g, int input_hw);

// Cost of covering a square FOV with p x p patches stepped by `stride`.
std::uint64_t count_sliding_flops(const NetGraph& g, int fov_hw, int stride);

} // namespace arm::net
