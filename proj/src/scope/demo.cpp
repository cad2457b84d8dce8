#include "arm/scope/demo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "arm/common/error.hpp"

namespace arm::scope {

std::array<float, 3> tissue_rgb(StainFamily family)
{
    return family == StainFamily::Pink ? std::array<float, 3>{0.93f, 0.62f, 0.78f}
                                       : std::array<float, 3>{0.72f, 0.58f, 0.88f};
}

namespace {

bool inside(const DemoBlob& b, double x, double y)
{
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    const double c = std::cos(b.angle);
    const double s = std::sin(b.angle);
    const double u = (dx * c + dy * s) / b.rx;
    const double v = (-dx * s + dy * c) / b.ry;
    return u * u + v * v <= 1.0;
}

Annotation outline(const DemoBlob& b)
{
    Annotation a;
    a.label = b.kind == BlobKind::Tumor ? "tumor" : "benign";
    const int n = 64;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        const double u = b.rx * std::cos(t);
        const double v = b.ry * std::sin(t);
        a.polygon.push_back({b.cx + u * std::cos(b.angle) - v * std::sin(b.angle),
                             b.cy + u * std::sin(b.angle) + v * std::cos(b.angle)});
    }
    return a;
}

} // namespace

DemoSlide make_demo_slide(const std::string& id, std::uint64_t seed, const DemoSlideOptions& options)
{
    if (options.cells < 2 || options.cell_px < 64) throw Error(ErrorCode::InvalidArgument, "demo slide too small");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int n = options.cells * options.cells;
    const double c = options.cell_px;

    std::vector<BlobKind> kinds(n);
    for (auto& k : kinds) {
        const double r = u01(rng);
        k = r < 0.35 ? BlobKind::Tumor : r < 0.75 ? BlobKind::Benign : BlobKind::Empty;
    }
    kinds[0] = BlobKind::Tumor;
    kinds[1] = BlobKind::Benign;

    DemoSlide out;
    for (int i = 0; i < n; ++i) {
        DemoBlob b;
        b.kind = kinds[i];
        b.cx = (i % options.cells + 0.5) * c;
        b.cy = (i / options.cells + 0.5) * c;
        if (b.kind == BlobKind::Tumor) {
            b.rx = b.ry = c * (0.09 + 0.13 * u01(rng));
        } else if (b.kind == BlobKind::Benign) {
            b.rx = c * (0.16 + 0.18 * u01(rng));
            b.ry = c * (0.11 + 0.13 * u01(rng));
            b.angle = std::numbers::pi * u01(rng);
        }
        out.blobs.push_back(b);
    }

    VirtualSlide& s = out.slide;
    s.id = id;
    s.base_um_per_px = options.base_um_per_px;
    const int side = options.cells * options.cell_px;
    s.image = tensor::Tensor(side, side, 3, 1.0f);
    const auto tissue = tissue_rgb(options.family);
    std::uniform_real_distribution<float> noise(-options.texture, options.texture);
    for (const auto& b : out.blobs) {
        if (b.kind == BlobKind::Empty) continue;
        const auto& rgb = b.kind == BlobKind::Tumor ? kTumorRgb : tissue;
        const double r = std::max(b.rx, b.ry);
        for (int y = std::max(0, static_cast<int>(b.cy - r - 1)); y < std::min(side, static_cast<int>(b.cy + r + 2)); ++y)
            for (int x = std::max(0, static_cast<int>(b.cx - r - 1)); x < std::min(side, static_cast<int>(b.cx + r + 2)); ++x)
                if (inside(b, x + 0.5, y + 0.5))
                    for (int ch = 0; ch < 3; ++ch) s.image.at(y, x, ch) = std::clamp(rgb[ch] + noise(rng), 0.0f, 1.0f);
        s.annotations.push_back(outline(b));
    }
    return out;
}

StagePose cell_pose(const DemoSlideOptions& options, int cell_index)
{
    const double c = options.cell_px * options.base_um_per_px;
    return {(cell_index % options.cells + 0.5) * c, (cell_index / options.cells + 0.5) * c, 0.0};
}

} // namespace arm::scope
