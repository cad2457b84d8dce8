#include "arm/net/geometry.hpp"

#include <algorithm>

#include "arm/common/error.hpp"

namespace arm::net {

namespace {

int floor_div(int a, int b)
{
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

struct ExtentPass {
    std::vector<NodeExtent> extents;
    std::vector<Violation> violations;
    bool nominal_ok = true; // false when a strided 'same' layer breaks the floor law
};

ExtentPass propagate(const NetGraph& g)
{
    ExtentPass pass;
    pass.extents.resize(g.layers().size());
    for (std::size_t i = 0; i < g.layers().size(); ++i) {
        const auto& l = g.layers()[i];
        const auto& ins = g.input_indices(i);
        if (l.kind == LayerKind::Input) {
            pass.extents[i] = {};
            continue;
        }
        const NodeExtent in = pass.extents[ins.front()];
        NodeExtent out = in;
        switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::MaxPool:
        case LayerKind::AvgPool:
            out.field = in.field + (l.kernel - 1) * in.stride;
            out.stride = in.stride * l.stride;
            if (l.padding == tensor::Padding::Same) {
                pass.violations.push_back({l.name, "same-padding", "convolution pads its input with zeros"});
                if (l.stride != 1) {
                    pass.nominal_ok = false;
                } else {
                    const int total = l.kernel - 1;
                    const int before = total / 2;
                    out.start = in.start - before * in.stride;
                    out.tail = in.tail - (total - before) * in.stride;
                }
            }
            break;
        case LayerKind::Crop:
            out.start = in.start + l.crop * in.stride;
            out.tail = in.tail + l.crop * in.stride;
            break;
        case LayerKind::Concat: {
            int lo = in.start;
            int hi = in.start + in.field;
            for (std::size_t k = 1; k < ins.size(); ++k) {
                const NodeExtent& other = pass.extents[ins[k]];
                const std::string& peer = g.layers()[ins[k]].name;
                if (other.stride != in.stride) {
                    pass.violations.push_back({l.name, "branch-stride-mismatch",
                                               "input '" + peer + "' has stride " + std::to_string(other.stride) +
                                                   " vs " + std::to_string(in.stride)});
                    continue;
                }
                if (other.span() != in.span()) {
                    const int diff = std::abs(other.span() - in.span());
                    const bool symmetric = diff % (2 * in.stride) == 0;
                    pass.violations.push_back(
                        {l.name, "branch-extent-mismatch",
                         "input '" + peer + "' spans " + std::to_string(other.span()) + " px vs " +
                             std::to_string(in.span()) +
                             (symmetric ? " (fixable with a symmetric crop)" : " (odd difference, no symmetric crop)")});
                    continue;
                }
                if (other.center2() != in.center2()) {
                    pass.violations.push_back({l.name, "branch-alignment-mismatch",
                                               "input '" + peer + "' windows are centered differently"});
                    continue;
                }
                lo = std::min(lo, other.start);
                hi = std::max(hi, other.start + other.field);
            }
            out.start = lo;
            out.field = hi - lo;
            out.tail = in.span() - out.start - out.field;
            break;
        }
        default: break;
        }
        pass.extents[i] = out;
    }
    return pass;
}

GridGeometry to_geometry(const NodeExtent& e)
{
    GridGeometry geo;
    geo.receptive_field_px = e.field;
    geo.output_stride_px = e.stride;
    geo.window_start_px = e.start;
    geo.offset_px = e.start + floor_div(e.field - 1, 2);
    geo.canonical_patch_px = e.span();
    return geo;
}

} // namespace

int GridGeometry::output_cells(int side) const noexcept
{
    if (side < canonical_patch_px) return 0;
    return (side - canonical_patch_px) / output_stride_px + 1;
}

double GridGeometry::cell_center(int i) const noexcept
{
    return window_start_px + static_cast<double>(receptive_field_px) / 2.0 +
           static_cast<double>(i) * output_stride_px;
}

std::vector<Violation> validate_fcn_safe(const NetGraph& g)
{
    return propagate(g).violations;
}

std::vector<NodeExtent> node_extents(const NetGraph& g)
{
    return propagate(g).extents;
}

GridGeometry compute_geometry(const NetGraph& g)
{
    auto pass = propagate(g);
    if (!pass.violations.empty()) {
        const auto& v = pass.violations.front();
        throw Error(ErrorCode::GraphUnsafe, "graph '" + g.name() + "' is not FCN-safe: layer '" + v.layer +
                                                "' violates " + v.rule);
    }
    return to_geometry(pass.extents.back());
}

GridGeometry nominal_geometry(const NetGraph& g)
{
    auto pass = propagate(g);
    if (!pass.nominal_ok) {
        throw Error(ErrorCode::GraphUnsafe, "graph '" + g.name() + "' has a strided same-padded layer");
    }
    for (const auto& v : pass.violations) {
        if (v.rule != "same-padding") {
            throw Error(ErrorCode::GraphUnsafe, "graph '" + g.name() + "' has misaligned branches at '" + v.layer + "'");
        }
    }
    return to_geometry(pass.extents.back());
}

std::vector<LayerShape> infer_shapes(const NetGraph& g, int input_h, int input_w)
{
    std::vector<LayerShape> shapes(g.layers().size());
    for (std::size_t i = 0; i < g.layers().size(); ++i) {
        const auto& l = g.layers()[i];
        const auto& ins = g.input_indices(i);
        LayerShape s = l.kind == LayerKind::Input ? LayerShape{input_h, input_w, g.input_channels()} : shapes[ins.front()];
        switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::MaxPool:
        case LayerKind::AvgPool:
            s.height = tensor::output_extent(s.height, l.kernel, l.stride, l.padding);
            s.width = tensor::output_extent(s.width, l.kernel, l.stride, l.padding);
            break;
        case LayerKind::Crop:
            if (s.height <= 2 * l.crop || s.width <= 2 * l.crop) {
                throw Error(ErrorCode::CropExhausted, "crop '" + l.name + "' exhausts its input");
            }
            s.height -= 2 * l.crop;
            s.width -= 2 * l.crop;
            break;
        case LayerKind::Concat:
            for (std::size_t k = 1; k < ins.size(); ++k) {
                if (shapes[ins[k]].height != s.height || shapes[ins[k]].width != s.width) {
                    throw Error(ErrorCode::ShapeMismatch, "concat '" + l.name + "' inputs differ spatially");
                }
            }
            break;
        default: break;
        }
        s.channels = g.channels(i);
        shapes[i] = s;
    }
    return shapes;
}

std::uint64_t count_flops(const NetGraph& g, int input_hw)
{
    const GridGeometry geo = nominal_geometry(g);
    if (input_hw < geo.canonical_patch_px) {
        throw Error(ErrorCode::InputTooSmall, "input " + std::to_string(input_hw) + " smaller than canonical patch " +
                                                  std::to_string(geo.canonical_patch_px));
    }
    const auto shapes = infer_shapes(g, input_hw, input_hw);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < g.layers().size(); ++i) {
        const auto& l = g.layers()[i];
        const auto& s = shapes[i];
        const std::uint64_t elems = static_cast<std::uint64_t>(s.height) * s.width * s.channels;
        switch (l.kind) {
        case LayerKind::Conv: {
            const auto in_c = static_cast<std::uint64_t>(g.channels(g.input_indices(i).front()));
            total += elems * in_c * static_cast<std::uint64_t>(l.kernel) * l.kernel;
            break;
        }
        case LayerKind::MaxPool:
        case LayerKind::AvgPool:
        case LayerKind::AffineAct:
        case LayerKind::LikelihoodHead: total += elems; break;
        default: break;
        }
    }
    return total;
}

std::uint64_t count_sliding_flops(const NetGraph& g, int fov_hw, int stride)
{
    const GridGeometry geo = nominal_geometry(g);
    if (stride < 1) throw Error(ErrorCode::BadStride, "stride must be positive");
    if (fov_hw < geo.canonical_patch_px) {
        throw Error(ErrorCode::InputTooSmall, "FOV smaller than canonical patch");
    }
    const auto per_axis = static_cast<std::uint64_t>((fov_hw - geo.canonical_patch_px) / stride + 1);
    return per_axis * per_axis * count_flops(g, geo.canonical_patch_px);
}

} // namespace arm::net
