#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "arm/scope/slide.hpp"

namespace arm::scope {

enum class StainFamily { Pink, Purple };

// Colours used by the synthetic slides. The tumour colour is what the demo
// colour detector looks for.
inline constexpr std::array<float, 3> kTumorRgb{0.45f, 0.15f, 0.55f};
inline constexpr float kTumorTolerance = 0.15f;
std::array<float, 3> tissue_rgb(StainFamily family);

struct DemoSlideOptions {
    int cells = 4;        // slide is cells x cells layout cells
    int cell_px = 320;    // each holds at most one blob, centred
    double base_um_per_px = 0.45;
    StainFamily family = StainFamily::Pink;
    float texture = 0.03f; // per-pixel stain noise amplitude
};

enum class BlobKind { Empty, Benign, Tumor };

struct DemoBlob {
    BlobKind kind = BlobKind::Empty;
    double cx = 0.0, cy = 0.0; // slide pixels
    double rx = 0.0, ry = 0.0;
    double angle = 0.0;
};

struct DemoSlide {
    VirtualSlide slide;
    std::vector<DemoBlob> blobs; // one per layout cell, row major
};

// White background, elliptical tissue blobs; tumour blobs are discs in the
// tumour colour and carry a "tumor" annotation, the rest "benign".
DemoSlide make_demo_slide(const std::string& id, std::uint64_t seed, const DemoSlideOptions& options = {});

// Stage pose centring the FOV on a layout cell.
StagePose cell_pose(const DemoSlideOptions& options, int cell_index);

} // namespace arm::scope
