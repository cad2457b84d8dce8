#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "arm/overlay/render.hpp"

using namespace arm::overlay;
using arm::infer::Heatmap;
using arm::net::GridGeometry;
using arm::tensor::Tensor;

namespace {

GridGeometry geometry(int r, int j, int start)
{
    GridGeometry g;
    g.receptive_field_px = r;
    g.output_stride_px = j;
    g.window_start_px = start;
    g.offset_px = start + (r - 1) / 2;
    g.canonical_patch_px = r;
    return g;
}

Heatmap random_heatmap(std::mt19937_64& rng, int rows, int cols, const GridGeometry& g)
{
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Heatmap h{rows, cols, std::vector<float>(static_cast<std::size_t>(rows) * cols), g, 0};
    for (auto& v : h.values) v = u(rng);
    return h;
}

Mask mask_from(int rows, int cols, std::initializer_list<std::pair<int, int>> cells)
{
    Mask m{rows, cols, std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * cols)};
    for (auto [r, c] : cells) m.cells[static_cast<std::size_t>(r) * cols + c] = 1;
    return m;
}

// Union-find labelling as an independent oracle.
std::vector<int> union_find_roots(const Mask& m)
{
    std::vector<int> parent(m.cells.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            if (!m.at(r, c)) continue;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= m.rows || cc >= m.cols || !m.at(rr, cc)) continue;
                    parent[find(r * m.cols + c)] = find(rr * m.cols + cc);
                }
        }
    std::vector<int> roots(m.cells.size(), -1);
    for (std::size_t i = 0; i < m.cells.size(); ++i)
        if (m.cells[i]) roots[i] = find(static_cast<int>(i));
    return roots;
}

double segment_distance(Point p, Point a, Point b)
{
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    const double t = len2 == 0 ? 0 : std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

} // namespace

TEST_CASE("threshold_heatmap uses >= and is monotone")
{
    std::mt19937_64 rng(5);
    const Heatmap h = random_heatmap(rng, 12, 9, geometry(1, 1, 0));
    CHECK(threshold_heatmap(h, 0.0f).count() == h.values.size());
    const float mx = *std::max_element(h.values.begin(), h.values.end());
    CHECK(threshold_heatmap(h, mx).count() >= 1);
    CHECK(threshold_heatmap(h, std::nextafter(mx, 2.0f)).count() == 0);
    std::size_t prev = h.values.size() + 1;
    for (float t = 0.0f; t <= 1.0f; t += 0.05f) {
        const auto n = threshold_heatmap(h, t).count();
        CHECK(n <= prev);
        prev = n;
    }

    Heatmap disk{21, 21, std::vector<float>(441, 0.1f), geometry(1, 1, 0), 0};
    for (int r = 0; r < 21; ++r)
        for (int c = 0; c < 21; ++c)
            if (std::hypot(r - 10, c - 10) <= 6) disk.at(r, c) = 0.9f;
    const Mask m = threshold_heatmap(disk, 0.5f);
    for (int r = 0; r < 21; ++r)
        for (int c = 0; c < 21; ++c) CHECK(m.at(r, c) == (std::hypot(r - 10, c - 10) <= 6));
}

TEST_CASE("connected components with 8-connectivity")
{
    CHECK(connected_components(mask_from(6, 6, {{0, 0}, {0, 1}, {4, 4}, {5, 5}})).regions.size() == 2);
    const Labels diag = connected_components(mask_from(3, 3, {{0, 0}, {1, 1}, {2, 2}}));
    CHECK(diag.regions.size() == 1);
    CHECK(diag.regions[0].area == 3);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::bernoulli_distribution b(0.4);
        Mask m{17, 23, std::vector<std::uint8_t>(17 * 23)};
        for (auto& c : m.cells) c = b(rng);
        const Labels l = connected_components(m);
        const auto roots = union_find_roots(m);
        std::map<int, int> root_to_label;
        int next = 1;
        for (std::size_t i = 0; i < m.cells.size(); ++i) {
            if (!m.cells[i]) {
                CHECK(l.ids[i] == 0);
                continue;
            }
            auto [it, fresh] = root_to_label.try_emplace(roots[i], next);
            if (fresh) ++next;
            CHECK(l.ids[i] == it->second);
        }
        CHECK(static_cast<int>(l.regions.size()) == next - 1);
    }
}

TEST_CASE("contour shapes")
{
    auto loops = trace_grid_contours(connected_components(mask_from(3, 3, {{1, 1}})));
    REQUIRE(loops.size() == 1);
    CHECK(loops[0].points == std::vector<Point>{{1, 1}, {2, 1}, {2, 2}, {1, 2}});
    CHECK_FALSE(loops[0].hole);

    loops = trace_grid_contours(connected_components(mask_from(4, 4, {{1, 1}, {1, 2}, {2, 1}, {2, 2}})));
    REQUIRE(loops.size() == 1);
    CHECK(loops[0].points == std::vector<Point>{{1, 1}, {3, 1}, {3, 3}, {1, 3}});

    loops = trace_grid_contours(connected_components(mask_from(3, 3, {{0, 0}, {1, 1}})));
    REQUIRE(loops.size() == 1);
    CHECK(loops[0].points.size() == 8);

    const Mask ring = mask_from(3, 3, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}, {2, 2}});
    loops = trace_grid_contours(connected_components(ring));
    REQUIRE(loops.size() == 2);
    CHECK(loops[0].hole != loops[1].hole);
}

TEST_CASE("traced polygons enclose exactly the cells at or above threshold")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> side(1, 32);
    std::uniform_real_distribution<float> tdist(0.05f, 0.95f);
    const GridGeometry geos[] = {geometry(1, 1, 0), geometry(32, 4, 0), geometry(7, 2, 3)};
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const GridGeometry& g = geos[trial % 3];
        const Heatmap h = random_heatmap(rng, side(rng), side(rng), g);
        const float t = tdist(rng);
        const Mask m = threshold_heatmap(h, t);
        const auto loops = trace_contours(connected_components(m), g);
        for (int r = 0; r < h.rows; ++r)
            for (int c = 0; c < h.cols; ++c)
                mismatches += inside_contours(loops, {g.cell_center(c), g.cell_center(r)}) != m.at(r, c);
    }
    CHECK(mismatches == 0);
}

TEST_CASE("largest focus measurement")
{
    auto measure = [](const Mask& m, const GridGeometry& g, double um) {
        const Labels l = connected_components(m);
        return measure_largest_focus(l, trace_contours(l, g), um);
    };
    const auto single = measure(mask_from(3, 3, {{1, 1}}), geometry(1, 1, 0), 1.0);
    REQUIRE(single);
    CHECK(single->diameter_mm == doctest::Approx(std::sqrt(2.0) * 1e-3).epsilon(1e-12));

    double prev = 0.0;
    for (int len = 2; len <= 11; ++len) {
        Mask m{1, 12, std::vector<std::uint8_t>(12)};
        for (int c = 0; c < len; ++c) m.cells[c] = 1;
        const auto d = measure(m, geometry(32, 32, 0), 0.45);
        CHECK(d->diameter_mm == doctest::Approx(std::hypot(len, 1.0) * 32 * 0.45 / 1000).epsilon(1e-12));
        CHECK(d->diameter_mm > prev);
        prev = d->diameter_mm;
    }

    // Cells lying wholly inside a circle of grid radius 10 centred on a grid corner.
    Mask disk{20, 20, std::vector<std::uint8_t>(400)};
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 20; ++c) {
            bool in = true;
            for (int dy = 0; dy <= 1; ++dy)
                for (int dx = 0; dx <= 1; ++dx) in = in && std::hypot(c + dx - 10, r + dy - 10) <= 10.0;
            disk.cells[r * 20 + c] = in;
        }
    const auto d = measure(disk, geometry(32, 4, 0), 0.45);
    CHECK(std::abs(d->diameter_mm - 20 * 4 * 0.45 / 1000) <= 0.02 * 20 * 4 * 0.45 / 1000);
    const auto d2 = measure(disk, geometry(32, 4, 0), 0.9);
    CHECK(d2->diameter_mm == 2 * d->diameter_mm);

    CHECK_FALSE(measure(Mask{2, 2, std::vector<std::uint8_t>(4)}, geometry(1, 1, 0), 1.0));
}

TEST_CASE("compose_display leaves the image alone outside the overlay")
{
    std::mt19937_64 rng(9);
    Tensor fov(64, 64, 3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : fov.data()) v = u(rng);

    Heatmap h{15, 15, std::vector<float>(225, 0.0f), geometry(8, 4, 2), 0};
    for (int r = 4; r < 10; ++r)
        for (int c = 3; c < 12; ++c) h.at(r, c) = 0.8f;

    OverlayOptions opt;
    OverlayGraphic g = build_overlay(h, 64, 64, opt);
    REQUIRE(g.polygons.size() == 1);
    CHECK(g.texts.empty());

    const Tensor plain = compose_display(fov, OverlayGraphic{DisplayMode::Off, ColorSpace::Rgb, g.polygons, g.texts});
    CHECK(plain == fov);

    const Tensor outlined = compose_display(fov, g);
    int changed = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            bool diff = false;
            for (int c = 0; c < 3; ++c) diff = diff || outlined.at(y, x, c) != fov.at(y, x, c);
            if (!diff) continue;
            ++changed;
            const auto& pts = g.polygons[0].points;
            double best = 1e9;
            for (std::size_t i = 0; i < pts.size(); ++i)
                best = std::min(best, segment_distance({x + 0.5, y + 0.5}, pts[i], pts[(i + 1) % pts.size()]));
            CHECK(best <= 1.5);
        }
    CHECK(changed > 0);

    g.color_space = ColorSpace::GreenOnly;
    const Tensor greens = compose_display(fov, g);
    g.mode = DisplayMode::Heatmap;
    const Tensor green_heat = compose_display(fov, g, &h);
    for (const Tensor* t : {&greens, &green_heat})
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                CHECK(t->at(y, x, 0) == fov.at(y, x, 0));
                CHECK(t->at(y, x, 2) == fov.at(y, x, 2));
            }

    g.color_space = ColorSpace::Rgb;
    g.polygons.clear();
    const Tensor heat = compose_display(fov, g, &h);
    // Pixel (20, 20) lies in cell (4, 4) with value 0.8; hot(0.8) = (1, 1, 0.4).
    CHECK(heat.at(20, 20, 0) == doctest::Approx(0.6 * fov.at(20, 20, 0) + 0.4));
    CHECK(heat.at(20, 20, 2) == doctest::Approx(0.6 * fov.at(20, 20, 2) + 0.4 * 0.4));
    CHECK(heat.at(0, 0, 0) == fov.at(0, 0, 0)); // before the first cell
    CHECK_THROWS(compose_display(fov, g));
}

TEST_CASE("text readout and serialization")
{
    Heatmap h{10, 10, std::vector<float>(100, 0.0f), geometry(1, 1, 0), 0};
    for (int r = 2; r < 6; ++r)
        for (int c = 2; c < 8; ++c) h.at(r, c) = 1.0f;
    OverlayOptions opt;
    opt.um_per_px = 1000.0;
    const OverlayGraphic g = build_overlay(h, 60, 60, opt);
    REQUIRE(g.texts.size() == 1);
    CHECK(g.texts[0].text == "7.211 MM");

    Tensor blank(60, 60, 3, 0.0f);
    OverlayGraphic only_text{DisplayMode::Outline, ColorSpace::Rgb, {}, {{"08", {10, 20}, kGreen}}};
    const Tensor t = compose_display(blank, only_text);
    int lit = 0;
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 60; ++x)
            if (t.at(y, x, 1) > 0) {
                ++lit;
                CHECK(x >= 10);
                CHECK(x < 10 + 2 * kGlyphAdvance);
                CHECK(y >= 20);
                CHECK(y < 27);
            }
    CHECK(lit > 20);
    CHECK(glyph('m') == glyph('M'));

    const auto j = to_json(g);
    CHECK(j["polygons"][0]["points"].size() == 2 * g.polygons[0].points.size());
    const OverlayGraphic back = overlay_from_json(j);
    CHECK(back.polygons[0].points == g.polygons[0].points);
    CHECK(back.texts[0].text == g.texts[0].text);
    CHECK(to_json(back) == j);

    OverlayOptions off;
    off.mode = DisplayMode::Off;
    const auto empty = build_overlay(h, 60, 60, off);
    CHECK(empty.polygons.empty());
    CHECK(empty.texts.empty());
}
