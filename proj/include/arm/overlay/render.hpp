#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arm/infer/heatmap.hpp"
#include "arm/overlay/contours.hpp"
#include "arm/tensor/tensor.hpp"

namespace arm::overlay {

enum class DisplayMode { Outline, Heatmap, Off };
enum class ColorSpace { Rgb, GreenOnly };

const char* to_string(DisplayMode m);
const char* to_string(ColorSpace c);
std::optional<DisplayMode> parse_display_mode(std::string_view s);
std::optional<ColorSpace> parse_color_space(std::string_view s);

using Rgb8 = std::array<int, 3>;

inline constexpr Rgb8 kGreen{0, 255, 0};

struct Polygon {
    std::string tag = "tumor";
    Rgb8 color = kGreen;
    bool hole = false;
    std::vector<Point> points;
};

struct TextLabel {
    std::string text;
    Point anchor; // top-left of the first glyph
    Rgb8 color = kGreen;
};

struct OverlayGraphic {
    DisplayMode mode = DisplayMode::Outline;
    ColorSpace color_space = ColorSpace::Rgb;
    std::vector<Polygon> polygons;
    std::vector<TextLabel> texts;
};

struct OverlayOptions {
    float threshold = 0.5f;
    DisplayMode mode = DisplayMode::Outline;
    ColorSpace color_space = ColorSpace::Rgb;
    std::string tag = "tumor";
    Rgb8 color = kGreen;
    double um_per_px = 0.0; // > 0 adds a size readout for the largest focus
};

// Threshold, label, trace and measure in one go. Polygons are clamped to the
// FOV; mode off yields an empty graphic.
OverlayGraphic build_overlay(const infer::Heatmap& h, int fov_width, int fov_height, const OverlayOptions& options);

// Outline: 2 px polylines plus text, other pixels untouched. Heatmap:
// colormap blended at alpha 0.4 over the grid cells (needs `heat`). GreenOnly
// only ever writes the G channel.
tensor::Tensor compose_display(const tensor::Tensor& fov_rgb, const OverlayGraphic& g,
                               const infer::Heatmap* heat = nullptr);

inline constexpr double kHeatmapAlpha = 0.4;

// 5x7 glyph rows, bit 4 = leftmost column. Unknown characters render as blanks.
const std::array<std::uint8_t, 7>& glyph(char ch);
inline constexpr int kGlyphAdvance = 6;

// Flat [x0, y0, x1, y1, ...] coordinate arrays.
nlohmann::json to_json(const OverlayGraphic& g);
OverlayGraphic overlay_from_json(const nlohmann::json& j);

} // namespace arm::overlay
