#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "arm/tensor/tensor.hpp"

namespace arm::eval {

struct HSDPoint {
    double hue = 0.0;        // radians; 0 whenever saturation is 0
    double saturation = 0.0;
    double density = 0.0;    // mean optical density
};

struct HSDSample {
    HSDPoint point;
    bool clamped = false; // a channel was outside (0, I0] and was clamped
};

inline constexpr double kWhiteLevel = 255.0;

// OD_c = -log10(c / I0), D = mean OD, cx = OD_R / D - 1,
// cy = (OD_G - OD_B) / (D * sqrt 3). Channels are counts in [1, I0].
HSDSample hsd_transform(double r, double g, double b, double i0 = kWhiteLevel);

// Same transform from optical densities directly.
HSDPoint hsd_from_od(double od_r, double od_g, double od_b);

struct ColorOptions {
    double white_level = kWhiteLevel;
    double tissue_density = 0.05; // pixels below this OD are treated as glass
    double hist_max_density = 2.0;
    int hist_bins = 40;
};

struct ColorRow {
    std::string image_id;
    HSDPoint mean;                // hue/saturation of the mean chroma over tissue pixels
    double tissue_fraction = 0.0;
    std::uint64_t clamped_pixels = 0;
    bool excluded = false;        // no tissue: kept out of the hue scatter
};

struct DensityHistogram {
    std::string image_id;
    double bin_width = 0.0;
    std::vector<std::uint64_t> counts; // all pixels; the last bin absorbs overflow
};

struct ColorSummary {
    std::vector<ColorRow> rows;
    std::vector<DensityHistogram> histograms;
};

// rgb in [0,1] is scaled to counts by white_level.
ColorRow summarize_image(const std::string& id, const tensor::Tensor& rgb, const ColorOptions& opt = {},
                         DensityHistogram* hist = nullptr);

struct NamedImage {
    std::string id;
    tensor::Tensor rgb;
};

ColorSummary color_summary(const std::vector<NamedImage>& images, const ColorOptions& opt = {});

// colors.csv: image_id,hue,saturation,density,tissue_fraction,clamped_pixels,excluded
void write_colors_csv(std::ostream& os, const ColorSummary& s);
// density_hist.csv: image_id,bin_lo,bin_hi,count
void write_density_hist_csv(std::ostream& os, const ColorSummary& s);

// Absolute angular distance in [0, pi].
double hue_distance(double a, double b);

} // namespace arm::eval
