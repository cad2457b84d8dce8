#include "arm/scope/capture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arm/common/error.hpp"
#include "arm/infer/modes.hpp"

namespace arm::scope {

using tensor::Tensor;

namespace {

int reflect101(int i, int n) noexcept
{
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

std::vector<double> gaussian_kernel(double sigma)
{
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& v : k) v /= sum;
    return k;
}

} // namespace

Tensor render_fov(const VirtualSlide& slide, const StagePose& pose, const Objective& objective, int fov_px)
{
    if (fov_px <= 0) throw Error(ErrorCode::InvalidArgument, "fov_px must be positive");
    const Tensor& img = slide.image;
    const int W = img.width();
    const int H = img.height();
    const int C = img.channels();
    Tensor out(fov_px, fov_px, 3, 1.0f);

    const double scale = objective.um_per_px / slide.base_um_per_px; // slide pixels per FOV pixel
    const double sx0 = pose.x_um / slide.base_um_per_px + (0.5 - fov_px / 2.0) * scale - 0.5;
    const double sy0 = pose.y_um / slide.base_um_per_px + (0.5 - fov_px / 2.0) * scale - 0.5;

    auto sample = [&](int y, int x, int c) -> double {
        if (x < 0 || y < 0 || x >= W || y >= H) return 1.0;
        return img.at(y, x, C == 1 ? 0 : c);
    };

    for (int y = 0; y < fov_px; ++y) {
        const double sy = sy0 + y * scale;
        const int y0 = static_cast<int>(std::floor(sy));
        const double fy = sy - y0;
        for (int x = 0; x < fov_px; ++x) {
            const double sx = sx0 + x * scale;
            const int x0 = static_cast<int>(std::floor(sx));
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = sample(y0, x0, c) * (1.0 - fx) + sample(y0, x0 + 1, c) * fx;
                const double bot = sample(y0 + 1, x0, c) * (1.0 - fx) + sample(y0 + 1, x0 + 1, c) * fx;
                out.at(y, x, c) = static_cast<float>(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    const double sigma = std::abs(pose.focus_z) * kDefocusSigmaPerUnit;
    return sigma > 0.0 ? gaussian_blur(out, sigma) : out;
}

Mosaic mosaic_rggb(const Tensor& rgb)
{
    Mosaic m{rgb.height(), rgb.width(), std::vector<float>(rgb.size() / rgb.channels())};
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) m.at(y, x) = rgb.at(y, x, bayer_channel(y, x));
    return m;
}

Mosaic capture_fov(const VirtualSlide& slide, const StagePose& pose, const Objective& objective, int fov_px)
{
    if (!pose_in_bounds(slide, pose)) throw Error(ErrorCode::OutOfBounds, "stage pose is off the slide");
    if (fov_px <= 0 || fov_px % 2 != 0) throw Error(ErrorCode::InvalidArgument, "fov_px must be positive and even");
    return mosaic_rggb(render_fov(slide, pose, objective, fov_px));
}

Tensor debayer(const Mosaic& raw)
{
    if (raw.height % 2 != 0 || raw.width % 2 != 0 || raw.height < 2 || raw.width < 2)
        throw Error(ErrorCode::OddDimensions, "mosaic dimensions must be even");
    const int H = raw.height;
    const int W = raw.width;
    auto v = [&](int y, int x) { return raw.at(reflect101(y, H), reflect101(x, W)); };

    Tensor out(H, W, 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const float here = raw.at(y, x);
            const float cross = 0.25f * (v(y - 1, x) + v(y + 1, x) + v(y, x - 1) + v(y, x + 1));
            const float diag = 0.25f * (v(y - 1, x - 1) + v(y - 1, x + 1) + v(y + 1, x - 1) + v(y + 1, x + 1));
            const float horiz = 0.5f * (v(y, x - 1) + v(y, x + 1));
            const float vert = 0.5f * (v(y - 1, x) + v(y + 1, x));
            float r, g, b;
            switch (bayer_channel(y, x)) {
            case 0: r = here, g = cross, b = diag; break;
            case 2: r = diag, g = cross, b = here; break;
            default:
                g = here;
                if (y % 2 == 0) r = horiz, b = vert; // red row
                else r = vert, b = horiz;
            }
            out.at(y, x, 0) = r;
            out.at(y, x, 1) = g;
            out.at(y, x, 2) = b;
        }
    }
    return out;
}

Tensor flat_field_white_balance(const Tensor& rgb, const Tensor& gain_map, std::array<float, 3> wb_gains)
{
    if (gain_map.height() != rgb.height() || gain_map.width() != rgb.width())
        throw Error(ErrorCode::ShapeMismatch, "gain map size differs from the image");
    if (gain_map.channels() != 1 && gain_map.channels() != rgb.channels())
        throw Error(ErrorCode::ChannelMismatch, "gain map needs 1 or " + std::to_string(rgb.channels()) + " channels");
    Tensor out(rgb.height(), rgb.width(), rgb.channels());
    const bool mono = gain_map.channels() == 1;
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            for (int c = 0; c < rgb.channels(); ++c) {
                const double g = gain_map.at(y, x, mono ? 0 : c) * (c < 3 ? wb_gains[c] : 1.0f);
                out.at(y, x, c) = static_cast<float>(std::clamp(rgb.at(y, x, c) * g, 0.0, 1.0));
            }
    return out;
}

Tensor gaussian_blur(const Tensor& image, double sigma)
{
    if (sigma <= 0.0) return image;
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int H = image.height();
    const int W = image.width();
    const int C = image.channels();
    Tensor tmp(H, W, C);
    Tensor out(H, W, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * image.at(y, std::clamp(x + i, 0, W - 1), c);
                tmp.at(y, x, c) = static_cast<float>(acc);
            }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(std::clamp(y + i, 0, H - 1), x, c);
                out.at(y, x, c) = static_cast<float>(acc);
            }
    return out;
}

double laplacian_energy(const Tensor& rgb, double background_luma)
{
    const int H = rgb.height();
    const int W = rgb.width();
    if (H < 3 || W < 3) return 0.0;
    auto luma = [&](int y, int x) {
        double s = 0.0;
        for (int c = 0; c < rgb.channels(); ++c) s += rgb.at(y, x, c);
        return s / rgb.channels();
    };
    double sum2 = 0.0;
    std::size_t n = 0;
    for (int y = 1; y < H - 1; ++y)
        for (int x = 1; x < W - 1; ++x) {
            const double here = luma(y, x);
            if (here >= background_luma) continue;
            const double l = luma(y - 1, x) + luma(y + 1, x) + luma(y, x - 1) + luma(y, x + 1) - 4.0 * here;
            sum2 += l * l;
            ++n;
        }
    return n == 0 ? 0.0 : sum2 / static_cast<double>(n);
}

double focus_score(const Tensor& rgb, double scale)
{
    return std::tanh(laplacian_energy(rgb) / (2.0 * scale));
}

FocusScorer laplacian_focus_scorer(double scale)
{
    return [scale](const Tensor& rgb) { return focus_score(rgb, scale); };
}

FocusScorer net_focus_scorer(std::shared_ptr<const infer::CompiledNet> net)
{
    return [net = std::move(net)](const Tensor& rgb) {
        const auto h = net->fcn_safe() ? infer::run_fcn(*net, rgb) : infer::run_naive_fcn(*net, rgb);
        return std::accumulate(h.values.begin(), h.values.end(), 0.0) / static_cast<double>(h.values.size());
    };
}

double psnr(const Tensor& a, const Tensor& b, int border)
{
    if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels())
        throw Error(ErrorCode::ShapeMismatch, "psnr needs equal shapes");
    double se = 0.0;
    std::size_t n = 0;
    for (int y = border; y < a.height() - border; ++y)
        for (int x = border; x < a.width() - border; ++x)
            for (int c = 0; c < a.channels(); ++c) {
                const double d = static_cast<double>(a.at(y, x, c)) - b.at(y, x, c);
                se += d * d;
                ++n;
            }
    if (n == 0) throw Error(ErrorCode::EmptyInput, "psnr over an empty region");
    const double mse = se / static_cast<double>(n);
    return mse == 0.0 ? INFINITY : 10.0 * std::log10(1.0 / mse);
}

} // namespace arm::scope
