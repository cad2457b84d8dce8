#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arm/infer/heatmap.hpp"
#include "arm/net/geometry.hpp"

namespace arm::overlay {

// Binary grid with the heatmap's shape.
struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> cells;

    bool at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c] != 0; }
    std::size_t count() const noexcept;
};

struct Region {
    int id = 0; // 1-based label
    int area = 0;
    int min_row = 0, min_col = 0, max_row = 0, max_col = 0;
};

struct Labels {
    int rows = 0;
    int cols = 0;
    std::vector<int> ids; // 0 = background
    std::vector<Region> regions; // regions[k].id == k + 1

    int at(int r, int c) const { return ids[static_cast<std::size_t>(r) * cols + c]; }
};

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

// Closed loop, last vertex not repeated. Holes run counter-clockwise (y down).
struct Contour {
    int region = 0;
    bool hole = false;
    std::vector<Point> points;
};

// Cell positive iff value >= t.
Mask threshold_heatmap(const infer::Heatmap& h, float t);

// 8-connected components labelled in raster-scan order of their first cell.
Labels connected_components(const Mask& mask);

// Crack-following boundaries on grid corners, one outer loop per region plus
// one loop per hole. Cells inside an odd number of loops are exactly the
// positive cells. Diagonal contacts pinch the loop instead of splitting it.
std::vector<Contour> trace_grid_contours(const Labels& labels);

// Grid corner (gx, gy) to FOV pixels: cell i spans [center(i) - j/2, center(i) + j/2).
Point grid_to_fov(const net::GridGeometry& g, double gx, double gy) noexcept;

std::vector<Contour> trace_contours(const Labels& labels, const net::GridGeometry& geometry);

// Even-odd rule over all loops.
bool inside_contours(const std::vector<Contour>& loops, Point p) noexcept;

struct Measurement {
    int region_id = 0;
    double diameter_px = 0.0;
    double diameter_mm = 0.0;
};

// Feret diameter of the largest region's outer loop (in FOV pixels of
// `fov_loops`). Returns nothing when there are no regions.
std::optional<Measurement> measure_largest_focus(const Labels& labels, const std::vector<Contour>& fov_loops,
                                                 double um_per_px);

double feret_diameter(const std::vector<Point>& points) noexcept;

} // namespace arm::overlay
