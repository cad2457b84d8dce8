#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "arm/scope/slide.hpp"
#include "arm/tensor/tensor.hpp"

namespace arm::infer {
class CompiledNet;
}

namespace arm::scope {

// Single-channel RGGB sensor raster: R at (even, even), B at (odd, odd).
struct Mosaic {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Color channel sampled at sensor site (y, x).
constexpr int bayer_channel(int y, int x) noexcept { return (y & 1) + (x & 1); }

inline constexpr double kDefocusSigmaPerUnit = 1.0;

// Ideal optics: bilinear resample of the slide at objective.um_per_px around
// the pose, white off-slide, then Gaussian blur of sigma |focus_z| * kDefocusSigmaPerUnit.
tensor::Tensor render_fov(const VirtualSlide& slide, const StagePose& pose, const Objective& objective, int fov_px);

Mosaic mosaic_rggb(const tensor::Tensor& rgb);

// render_fov + mosaic. Throws OutOfBounds for a pose off the slide, InvalidArgument for odd fov_px.
Mosaic capture_fov(const VirtualSlide& slide, const StagePose& pose, const Objective& objective, int fov_px);

// Bilinear demosaic with mirrored borders. Throws OddDimensions.
tensor::Tensor debayer(const Mosaic& raw);

// clamp(rgb * gain_map * wb, 0, 1); gain_map has one channel or three.
tensor::Tensor flat_field_white_balance(const tensor::Tensor& rgb, const tensor::Tensor& gain_map,
                                        std::array<float, 3> wb_gains);

tensor::Tensor gaussian_blur(const tensor::Tensor& image, double sigma);

// Mean squared 4-neighbour Laplacian of luma over interior pixels darker
// than `background_luma`, so empty glass does not dilute the measure. 0 when
// there are no such pixels.
double laplacian_energy(const tensor::Tensor& rgb, double background_luma = 0.95);

inline constexpr double kFocusScale = 5e-5;

// tanh(e / (2 * scale)) of the Laplacian energy: 0 for flat images, toward 1 when sharp.
double focus_score(const tensor::Tensor& rgb, double scale = kFocusScale);

using FocusScorer = std::function<double(const tensor::Tensor&)>;

FocusScorer laplacian_focus_scorer(double scale = kFocusScale);
// Mean of a classifier's heatmap over the frame; the classifier outputs P(in focus).
FocusScorer net_focus_scorer(std::shared_ptr<const infer::CompiledNet> net);

double psnr(const tensor::Tensor& a, const tensor::Tensor& b, int border = 0);

} // namespace arm::scope
