#include "arm/overlay/contours.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arm::overlay {

std::size_t Mask::count() const noexcept
{
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

Mask threshold_heatmap(const infer::Heatmap& h, float t)
{
    Mask m{h.rows, h.cols, std::vector<std::uint8_t>(h.values.size())};
    for (std::size_t i = 0; i < h.values.size(); ++i) m.cells[i] = h.values[i] >= t ? 1 : 0;
    return m;
}

Labels connected_components(const Mask& mask)
{
    Labels out{mask.rows, mask.cols, std::vector<int>(mask.cells.size(), 0), {}};
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask.at(r, c) || out.at(r, c) != 0) continue;
            Region reg{static_cast<int>(out.regions.size()) + 1, 0, r, c, r, c};
            out.ids[static_cast<std::size_t>(r) * mask.cols + c] = reg.id;
            stack.assign(1, {r, c});
            while (!stack.empty()) {
                const auto [y, x] = stack.back();
                stack.pop_back();
                ++reg.area;
                reg.min_row = std::min(reg.min_row, y);
                reg.max_row = std::max(reg.max_row, y);
                reg.min_col = std::min(reg.min_col, x);
                reg.max_col = std::max(reg.max_col, x);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy;
                        const int xx = x + dx;
                        if (yy < 0 || xx < 0 || yy >= mask.rows || xx >= mask.cols) continue;
                        const std::size_t k = static_cast<std::size_t>(yy) * mask.cols + xx;
                        if (!mask.cells[k] || out.ids[k] != 0) continue;
                        out.ids[k] = reg.id;
                        stack.push_back({yy, xx});
                    }
            }
            out.regions.push_back(reg);
        }
    }
    return out;
}

namespace {

// Directions in screen coordinates (y down): E, S, W, N.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

struct Edge {
    int x, y; // start corner
    int dir;
};

double signed_area2(const std::vector<Point>& pts) noexcept
{
    double a = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        const Point& q = pts[(i + 1) % pts.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return a;
}

std::vector<Point> drop_collinear(const std::vector<Point>& pts)
{
    std::vector<Point> out;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = pts[(i + n - 1) % n];
        const Point& b = pts[i];
        const Point& c = pts[(i + 1) % n];
        const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
        const double dot = (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y);
        if (cross != 0.0 || dot < 0.0) out.push_back(b);
    }
    return out;
}

void trace_region(const Labels& labels, const Region& reg, std::vector<Contour>& out)
{
    auto in = [&](int r, int c) {
        return r >= 0 && c >= 0 && r < labels.rows && c < labels.cols && labels.at(r, c) == reg.id;
    };
    std::vector<Edge> edges;
    for (int r = reg.min_row; r <= reg.max_row; ++r)
        for (int c = reg.min_col; c <= reg.max_col; ++c) {
            if (!in(r, c)) continue;
            if (!in(r - 1, c)) edges.push_back({c, r, 0});
            if (!in(r, c + 1)) edges.push_back({c + 1, r, 1});
            if (!in(r + 1, c)) edges.push_back({c + 1, r + 1, 2});
            if (!in(r, c - 1)) edges.push_back({c, r + 1, 3});
        }
    auto key = [](const Edge& e) { return std::pair{e.y, e.x}; };
    std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
        return key(a) != key(b) ? key(a) < key(b) : a.dir < b.dir;
    });
    std::vector<bool> used(edges.size(), false);

    // Outgoing edges from a corner: at most two (a saddle).
    auto outgoing = [&](int x, int y) {
        auto lo = std::lower_bound(edges.begin(), edges.end(), std::pair{y, x},
                                   [&](const Edge& e, const std::pair<int, int>& k) { return key(e) < k; });
        std::vector<std::size_t> idx;
        for (auto it = lo; it != edges.end() && key(*it) == std::pair{y, x}; ++it)
            idx.push_back(static_cast<std::size_t>(it - edges.begin()));
        return idx;
    };

    for (std::size_t first = 0; first < edges.size(); ++first) {
        if (used[first]) continue;
        Contour loop;
        loop.region = reg.id;
        std::size_t e = first;
        while (!used[e]) {
            used[e] = true;
            loop.points.push_back({static_cast<double>(edges[e].x), static_cast<double>(edges[e].y)});
            const int nx = edges[e].x + kDx[edges[e].dir];
            const int ny = edges[e].y + kDy[edges[e].dir];
            const auto next = outgoing(nx, ny);
            if (next.size() == 1) {
                e = next[0];
            } else {
                // Saddle: turn left so diagonal neighbours stay on one loop.
                const int left = (edges[e].dir + 3) % 4;
                e = edges[next[0]].dir == left ? next[0] : next[1];
            }
        }
        loop.hole = signed_area2(loop.points) < 0.0;
        loop.points = drop_collinear(loop.points);
        out.push_back(std::move(loop));
    }
}

} // namespace

std::vector<Contour> trace_grid_contours(const Labels& labels)
{
    std::vector<Contour> out;
    for (const auto& reg : labels.regions) trace_region(labels, reg, out);
    return out;
}

Point grid_to_fov(const net::GridGeometry& g, double gx, double gy) noexcept
{
    const double j = g.output_stride_px;
    return {g.cell_center(0) + (gx - 0.5) * j, g.cell_center(0) + (gy - 0.5) * j};
}

std::vector<Contour> trace_contours(const Labels& labels, const net::GridGeometry& geometry)
{
    auto loops = trace_grid_contours(labels);
    for (auto& loop : loops)
        for (auto& p : loop.points) p = grid_to_fov(geometry, p.x, p.y);
    return loops;
}

bool inside_contours(const std::vector<Contour>& loops, Point p) noexcept
{
    bool inside = false;
    for (const auto& loop : loops) {
        const auto& v = loop.points;
        for (std::size_t i = 0, k = v.size() - 1; i < v.size(); k = i++) {
            if ((v[i].y > p.y) != (v[k].y > p.y) &&
                p.x < (v[k].x - v[i].x) * (p.y - v[i].y) / (v[k].y - v[i].y) + v[i].x)
                inside = !inside;
        }
    }
    return inside;
}

double feret_diameter(const std::vector<Point>& points) noexcept
{
    double best = 0.0;
    for (std::size_t a = 0; a < points.size(); ++a)
        for (std::size_t b = a + 1; b < points.size(); ++b)
            best = std::max(best, std::hypot(points[a].x - points[b].x, points[a].y - points[b].y));
    return best;
}

std::optional<Measurement> measure_largest_focus(const Labels& labels, const std::vector<Contour>& fov_loops,
                                                 double um_per_px)
{
    if (labels.regions.empty()) return std::nullopt;
    const auto largest = std::max_element(labels.regions.begin(), labels.regions.end(),
                                          [](const Region& a, const Region& b) { return a.area < b.area; });
    std::vector<Point> pts;
    for (const auto& loop : fov_loops)
        if (loop.region == largest->id && !loop.hole) pts.insert(pts.end(), loop.points.begin(), loop.points.end());
    Measurement m;
    m.region_id = largest->id;
    m.diameter_px = feret_diameter(pts);
    m.diameter_mm = m.diameter_px * um_per_px / 1000.0;
    return m;
}

} // namespace arm::overlay
