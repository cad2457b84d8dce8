#include "arm/overlay/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "arm/common/error.hpp"

namespace arm::overlay {

using tensor::Tensor;

const char* to_string(DisplayMode m)
{
    switch (m) {
    case DisplayMode::Outline: return "outline";
    case DisplayMode::Heatmap: return "heatmap";
    case DisplayMode::Off: return "off";
    }
    return "?";
}

const char* to_string(ColorSpace c)
{
    return c == ColorSpace::Rgb ? "rgb" : "green_only";
}

std::optional<DisplayMode> parse_display_mode(std::string_view s)
{
    if (s == "outline") return DisplayMode::Outline;
    if (s == "heatmap") return DisplayMode::Heatmap;
    if (s == "off") return DisplayMode::Off;
    return std::nullopt;
}

std::optional<ColorSpace> parse_color_space(std::string_view s)
{
    if (s == "rgb") return ColorSpace::Rgb;
    if (s == "green_only") return ColorSpace::GreenOnly;
    return std::nullopt;
}

namespace {

using Glyph = std::array<std::uint8_t, 7>;

struct FontEntry {
    char ch;
    Glyph rows;
};

constexpr FontEntry kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}}, {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
};

constexpr Glyph kBlank{};

// Pixels touched by the overlay, with the colour that wins there (last drawn).
struct Canvas {
    int width, height;
    std::vector<int> color_index; // -1 = untouched
    std::vector<Rgb8> palette;

    Canvas(int w, int h) : width(w), height(h), color_index(static_cast<std::size_t>(w) * h, -1) {}

    void use(const Rgb8& c) { palette.push_back(c); }
    void paint(int x, int y)
    {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        color_index[static_cast<std::size_t>(y) * width + x] = static_cast<int>(palette.size()) - 1;
    }

    // 2 px wide stroke centred on the segment.
    void segment(Point a, Point b)
    {
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
        for (int s = 0; s <= steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            const double x = a.x + (b.x - a.x) * t;
            const double y = a.y + (b.y - a.y) * t;
            const int x0 = static_cast<int>(std::floor(x - 0.5));
            const int y0 = static_cast<int>(std::floor(y - 0.5));
            paint(x0, y0);
            paint(x0 + 1, y0);
            paint(x0, y0 + 1);
            paint(x0 + 1, y0 + 1);
        }
    }

    void text(const TextLabel& t)
    {
        int x = static_cast<int>(std::lround(t.anchor.x));
        const int y = static_cast<int>(std::lround(t.anchor.y));
        for (char ch : t.text) {
            const Glyph& g = glyph(ch);
            for (int r = 0; r < 7; ++r)
                for (int c = 0; c < 5; ++c)
                    if (g[r] & (0x10 >> c)) paint(x + c, y + r);
            x += kGlyphAdvance;
        }
    }
};

std::array<float, 3> hot(float v)
{
    v = std::clamp(v, 0.0f, 1.0f);
    return {std::clamp(3 * v, 0.0f, 1.0f), std::clamp(3 * v - 1, 0.0f, 1.0f), std::clamp(3 * v - 2, 0.0f, 1.0f)};
}

Point clamp_point(Point p, int w, int h)
{
    return {std::clamp(p.x, 0.0, static_cast<double>(w)), std::clamp(p.y, 0.0, static_cast<double>(h))};
}

} // namespace

const std::array<std::uint8_t, 7>& glyph(char ch)
{
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    for (const auto& e : kFont)
        if (e.ch == ch) return e.rows;
    return kBlank;
}

OverlayGraphic build_overlay(const infer::Heatmap& h, int fov_width, int fov_height, const OverlayOptions& options)
{
    OverlayGraphic g;
    g.mode = options.mode;
    g.color_space = options.color_space;
    if (options.mode == DisplayMode::Off || h.empty()) return g;

    const Labels labels = connected_components(threshold_heatmap(h, options.threshold));
    const auto loops = trace_contours(labels, h.geometry);
    for (const auto& loop : loops) {
        Polygon p;
        p.tag = options.tag;
        p.color = options.color;
        p.hole = loop.hole;
        for (const auto& pt : loop.points) p.points.push_back(clamp_point(pt, fov_width, fov_height));
        g.polygons.push_back(std::move(p));
    }
    if (options.um_per_px > 0.0) {
        if (const auto m = measure_largest_focus(labels, loops, options.um_per_px)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f MM", m->diameter_mm);
            const Region& reg = labels.regions[m->region_id - 1];
            const Point corner = grid_to_fov(h.geometry, reg.min_col, reg.min_row);
            const double width = static_cast<double>(std::string(buf).size()) * kGlyphAdvance;
            TextLabel t{buf, {}, options.color};
            t.anchor.x = std::clamp(corner.x, 0.0, std::max(0.0, fov_width - width));
            t.anchor.y = std::clamp(corner.y - 10.0, 0.0, std::max(0.0, fov_height - 7.0));
            g.texts.push_back(std::move(t));
        }
    }
    return g;
}

Tensor compose_display(const Tensor& fov_rgb, const OverlayGraphic& g, const infer::Heatmap* heat)
{
    Tensor out = fov_rgb;
    if (g.mode == DisplayMode::Off) return out;
    const bool green = g.color_space == ColorSpace::GreenOnly;
    const int W = out.width();
    const int H = out.height();

    if (g.mode == DisplayMode::Heatmap) {
        if (!heat) throw Error(ErrorCode::InvalidArgument, "heatmap mode needs the heatmap");
        const auto& geo = heat->geometry;
        const double j = geo.output_stride_px;
        const double origin = geo.cell_center(0) - j / 2.0;
        const float a = static_cast<float>(kHeatmapAlpha);
        for (int y = 0; y < H; ++y) {
            const int r = static_cast<int>(std::floor((y + 0.5 - origin) / j));
            if (y + 0.5 < origin || r >= heat->rows) continue;
            for (int x = 0; x < W; ++x) {
                const int c = static_cast<int>(std::floor((x + 0.5 - origin) / j));
                if (x + 0.5 < origin || c >= heat->cols) continue;
                const float v = heat->at(r, c);
                if (green) {
                    out.at(y, x, 1) = (1 - a) * out.at(y, x, 1) + a * v;
                } else {
                    const auto col = hot(v);
                    for (int k = 0; k < 3; ++k) out.at(y, x, k) = (1 - a) * out.at(y, x, k) + a * col[k];
                }
            }
        }
    }

    Canvas canvas(W, H);
    if (g.mode == DisplayMode::Outline) {
        for (const auto& p : g.polygons) {
            canvas.use(p.color);
            for (std::size_t i = 0; i < p.points.size(); ++i)
                canvas.segment(p.points[i], p.points[(i + 1) % p.points.size()]);
        }
    }
    for (const auto& t : g.texts) {
        canvas.use(t.color);
        canvas.text(t);
    }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const int idx = canvas.color_index[static_cast<std::size_t>(y) * W + x];
            if (idx < 0) continue;
            const Rgb8& c = canvas.palette[idx];
            if (green) {
                out.at(y, x, 1) = static_cast<float>(std::max({c[0], c[1], c[2]})) / 255.0f;
            } else {
                for (int k = 0; k < 3; ++k) out.at(y, x, k) = static_cast<float>(c[k]) / 255.0f;
            }
        }
    return out;
}

nlohmann::json to_json(const OverlayGraphic& g)
{
    using nlohmann::json;
    json polys = json::array();
    for (const auto& p : g.polygons) {
        json pts = json::array();
        for (const auto& pt : p.points) {
            pts.push_back(pt.x);
            pts.push_back(pt.y);
        }
        polys.push_back({{"tag", p.tag}, {"color", p.color}, {"hole", p.hole}, {"points", pts}});
    }
    json texts = json::array();
    for (const auto& t : g.texts)
        texts.push_back({{"text", t.text}, {"x", t.anchor.x}, {"y", t.anchor.y}, {"color", t.color}});
    return {{"mode", to_string(g.mode)}, {"color_space", to_string(g.color_space)}, {"polygons", polys}, {"texts", texts}};
}

OverlayGraphic overlay_from_json(const nlohmann::json& j)
{
    OverlayGraphic g;
    try {
        const auto mode = parse_display_mode(j.at("mode").get<std::string>());
        const auto cs = parse_color_space(j.at("color_space").get<std::string>());
        if (!mode || !cs) throw Error(ErrorCode::ParseError, "bad overlay mode or color space");
        g.mode = *mode;
        g.color_space = *cs;
        for (const auto& p : j.at("polygons")) {
            Polygon poly;
            poly.tag = p.at("tag").get<std::string>();
            poly.color = p.at("color").get<Rgb8>();
            poly.hole = p.at("hole").get<bool>();
            const auto& flat = p.at("points");
            if (flat.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd coordinate count");
            for (std::size_t i = 0; i < flat.size(); i += 2) poly.points.push_back({flat[i].get<double>(), flat[i + 1].get<double>()});
            g.polygons.push_back(std::move(poly));
        }
        for (const auto& t : j.at("texts"))
            g.texts.push_back({t.at("text").get<std::string>(), {t.at("x").get<double>(), t.at("y").get<double>()},
                               t.at("color").get<Rgb8>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("overlay: ") + e.what());
    }
    return g;
}

} // namespace arm::overlay
