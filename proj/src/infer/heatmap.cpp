#include "arm/infer/heatmap.hpp"

#include <json.hpp>

#include "arm/common/error.hpp"
#include "arm/common/png_io.hpp"
#include "arm/net/io.hpp"

namespace arm::infer {

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& png_path)
{
    auto p = png_path;
    return p.replace_extension(".geometry.json");
}

} // namespace

Heatmap heatmap_from_output(const tensor::Tensor& output, const net::GridGeometry& geometry, std::uint64_t seq)
{
    Heatmap h;
    h.rows = output.height();
    h.cols = output.width();
    h.geometry = geometry;
    h.source_fov_seq = seq;
    h.values.resize(static_cast<std::size_t>(h.rows) * h.cols);
    const int c = output.channels() - 1;
    for (int y = 0; y < h.rows; ++y)
        for (int x = 0; x < h.cols; ++x) h.at(y, x) = output.at(y, x, c);
    return h;
}

void export_heatmap(const Heatmap& h, const std::filesystem::path& png_path)
{
    net::write_bytes(png_path, encode_png_gray16(h.rows, h.cols, h.values));
    const nlohmann::json meta = {{"format", "arm-heatmap/1"},
                                 {"rows", h.rows},
                                 {"cols", h.cols},
                                 {"receptive_field_px", h.geometry.receptive_field_px},
                                 {"output_stride_px", h.geometry.output_stride_px},
                                 {"offset_px", h.geometry.offset_px},
                                 {"canonical_patch_px", h.geometry.canonical_patch_px},
                                 {"window_start_px", h.geometry.window_start_px},
                                 {"source_fov_seq", h.source_fov_seq}};
    net::write_text(sidecar_path(png_path), meta.dump(2) + "\n");
}

Heatmap import_heatmap(const std::filesystem::path& png_path)
{
    Heatmap h;
    const auto [rows, cols] = decode_png_gray16(net::read_bytes(png_path), h.values);
    h.rows = rows;
    h.cols = cols;
    const auto meta = nlohmann::json::parse(net::read_text(sidecar_path(png_path)));
    if (meta.at("rows").get<int>() != rows || meta.at("cols").get<int>() != cols) {
        throw Error(ErrorCode::ShapeMismatch, "heatmap sidecar disagrees with PNG size");
    }
    h.geometry.receptive_field_px = meta.at("receptive_field_px").get<int>();
    h.geometry.output_stride_px = meta.at("output_stride_px").get<int>();
    h.geometry.offset_px = meta.at("offset_px").get<int>();
    h.geometry.canonical_patch_px = meta.at("canonical_patch_px").get<int>();
    h.geometry.window_start_px = meta.at("window_start_px").get<int>();
    h.source_fov_seq = meta.at("source_fov_seq").get<std::uint64_t>();
    return h;
}

} // namespace arm::infer
