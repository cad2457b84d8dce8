#include "arm/eval/hsd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "arm/common/error.hpp"

namespace arm::eval {

HSDPoint hsd_from_od(double od_r, double od_g, double od_b)
{
    const double d = (od_r + od_g + od_b) / 3.0;
    if (d <= 0.0) return {};
    const double cx = od_r / d - 1.0;
    const double cy = (od_g - od_b) / (d * std::numbers::sqrt3);
    const double sat = std::hypot(cx, cy);
    return {sat == 0.0 ? 0.0 : std::atan2(cy, cx), sat, d};
}

HSDSample hsd_transform(double r, double g, double b, double i0)
{
    if (!(i0 > 1.0)) throw Error(ErrorCode::InvalidArgument, "white level must exceed one count");
    HSDSample s;
    auto od = [&](double c) {
        if (!(c >= 1.0) || c > i0) {
            s.clamped = true;
            c = std::clamp(std::isnan(c) ? 1.0 : c, 1.0, i0);
        }
        return -std::log10(c / i0);
    };
    const double odr = od(r), odg = od(g), odb = od(b);
    s.point = hsd_from_od(odr, odg, odb);
    return s;
}

ColorRow summarize_image(const std::string& id, const tensor::Tensor& rgb, const ColorOptions& opt, DensityHistogram* hist)
{
    if (rgb.channels() < 3) throw Error(ErrorCode::ChannelMismatch, "colour summary needs an RGB image");
    if (opt.hist_bins <= 0 || !(opt.hist_max_density > 0.0))
        throw Error(ErrorCode::InvalidArgument, "histogram needs positive bins and range");
    ColorRow row;
    row.image_id = id;
    if (hist) {
        hist->image_id = id;
        hist->bin_width = opt.hist_max_density / opt.hist_bins;
        hist->counts.assign(static_cast<std::size_t>(opt.hist_bins), 0);
    }
    double sum_cx = 0, sum_cy = 0, sum_d = 0;
    std::uint64_t tissue = 0, total = 0;
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) {
            const auto p = rgb.pixel(y, x);
            const auto s = hsd_transform(p[0] * opt.white_level, p[1] * opt.white_level, p[2] * opt.white_level,
                                         opt.white_level);
            ++total;
            row.clamped_pixels += s.clamped;
            const double d = s.point.density;
            if (hist) {
                const auto bin = std::min<std::size_t>(static_cast<std::size_t>(d / hist->bin_width), hist->counts.size() - 1);
                ++hist->counts[bin];
            }
            if (d < opt.tissue_density) continue;
            sum_cx += s.point.saturation * std::cos(s.point.hue);
            sum_cy += s.point.saturation * std::sin(s.point.hue);
            sum_d += d;
            ++tissue;
        }
    row.tissue_fraction = total ? static_cast<double>(tissue) / static_cast<double>(total) : 0.0;
    if (tissue == 0) {
        row.excluded = true;
        return row;
    }
    const double n = static_cast<double>(tissue);
    const double cx = sum_cx / n, cy = sum_cy / n;
    row.mean.saturation = std::hypot(cx, cy);
    row.mean.hue = row.mean.saturation == 0.0 ? 0.0 : std::atan2(cy, cx);
    row.mean.density = sum_d / n;
    row.excluded = row.mean.saturation == 0.0;
    return row;
}

ColorSummary color_summary(const std::vector<NamedImage>& images, const ColorOptions& opt)
{
    ColorSummary s;
    for (const auto& im : images) {
        DensityHistogram h;
        s.rows.push_back(summarize_image(im.id, im.rgb, opt, &h));
        s.histograms.push_back(std::move(h));
    }
    return s;
}

void write_colors_csv(std::ostream& os, const ColorSummary& s)
{
    os << "image_id,hue,saturation,density,tissue_fraction,clamped_pixels,excluded\n";
    char buf[160];
    for (const auto& r : s.rows) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%llu,%d\n", r.mean.hue, r.mean.saturation, r.mean.density,
                      r.tissue_fraction, static_cast<unsigned long long>(r.clamped_pixels), r.excluded ? 1 : 0);
        os << r.image_id << buf;
    }
}

void write_density_hist_csv(std::ostream& os, const ColorSummary& s)
{
    os << "image_id,bin_lo,bin_hi,count\n";
    char buf[96];
    for (const auto& h : s.histograms)
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%llu\n", h.bin_width * i, h.bin_width * (i + 1),
                          static_cast<unsigned long long>(h.counts[i]));
            os << h.image_id << buf;
        }
}

double hue_distance(double a, double b)
{
    const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

} // namespace arm::eval
