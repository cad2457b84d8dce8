#include "arm/infer/modes.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "arm/common/error.hpp"

namespace arm::infer {

namespace {

void require_fits(const CompiledNet& net, const tensor::Tensor& fov)
{
    const int p = net.geometry().canonical_patch_px;
    if (fov.height() < p || fov.width() < p) {
        throw Error(ErrorCode::InputTooSmall, "FOV " + std::to_string(fov.height()) + "x" + std::to_string(fov.width()) +
                                                  " smaller than canonical patch " + std::to_string(p));
    }
}

// One patch job: input window and the block of output cells it fills.
struct PatchJob {
    int y0, x0, side_h, side_w;
    int cell_r, cell_c;      // grid position of the patch's first output cell
    int skip_r, skip_c;      // leading output cells already owned by an earlier tile
};

struct AxisPlan {
    std::vector<int> starts; // first cell of each tile
    std::vector<int> skips;
    int tile = 1;
};

AxisPlan plan_tiles(int cells, int tile)
{
    AxisPlan plan;
    plan.tile = std::min(tile, cells);
    for (int k = 0; k * plan.tile < cells; ++k) {
        const int nominal = k * plan.tile;
        const int start = std::min(nominal, cells - plan.tile);
        plan.starts.push_back(start);
        plan.skips.push_back(nominal - start);
    }
    return plan;
}

} // namespace

Heatmap run_naive_fcn(const CompiledNet& net, const tensor::Tensor& fov)
{
    require_fits(net, fov);
    const auto& geo = net.geometry();
    tensor::Tensor out = net.forward(fov);
    if (out.height() != geo.output_cells(fov.height()) || out.width() != geo.output_cells(fov.width())) {
        throw Error(ErrorCode::ShapeMismatch, "network output grid does not follow its geometry");
    }
    return heatmap_from_output(out, geo);
}

Heatmap run_fcn(const CompiledNet& net, const tensor::Tensor& fov)
{
    if (!net.fcn_safe()) {
        throw Error(ErrorCode::GraphUnsafe, "graph '" + net.graph().name() + "' is not FCN-safe");
    }
    return run_naive_fcn(net, fov);
}

Heatmap run_sliding_window(const CompiledNet& net, const tensor::Tensor& fov, const SlidingOptions& options)
{
    require_fits(net, fov);
    const auto& geo = net.geometry();
    const int j = geo.output_stride_px;
    const int p = geo.canonical_patch_px;
    const int stride = options.stride == 0 ? j : options.stride;
    if (stride < 1 || stride % j != 0) {
        throw Error(ErrorCode::BadStride, "sliding stride " + std::to_string(stride) +
                                              " is not a multiple of the output stride " + std::to_string(j));
    }
    if (options.tile_cells < 1 || (options.tile_cells > 1 && stride != j)) {
        throw Error(ErrorCode::BadStride, "tiled sliding windows step on the canonical grid only");
    }

    Heatmap h;
    h.geometry = geo;
    h.geometry.output_stride_px = stride;
    h.rows = (fov.height() - p) / stride + 1;
    h.cols = (fov.width() - p) / stride + 1;
    h.values.assign(static_cast<std::size_t>(h.rows) * h.cols, 0.0f);

    std::vector<PatchJob> jobs;
    if (options.tile_cells == 1) {
        for (int r = 0; r < h.rows; ++r)
            for (int c = 0; c < h.cols; ++c) jobs.push_back({r * stride, c * stride, p, p, r, c, 0, 0});
    } else {
        const AxisPlan rows = plan_tiles(h.rows, options.tile_cells);
        const AxisPlan cols = plan_tiles(h.cols, options.tile_cells);
        const int side_h = p + (rows.tile - 1) * j;
        const int side_w = p + (cols.tile - 1) * j;
        for (std::size_t a = 0; a < rows.starts.size(); ++a)
            for (std::size_t b = 0; b < cols.starts.size(); ++b)
                jobs.push_back({rows.starts[a] * j, cols.starts[b] * j, side_h, side_w, rows.starts[a], cols.starts[b],
                                rows.skips[a], cols.skips[b]});
    }

    auto run_job = [&](const PatchJob& job) {
        const tensor::Tensor out = net.forward(fov.window(job.y0, job.x0, job.side_h, job.side_w));
        const int last = out.channels() - 1;
        for (int r = job.skip_r; r < out.height(); ++r)
            for (int c = job.skip_c; c < out.width(); ++c) h.at(job.cell_r + r, job.cell_c + c) = out.at(r, c, last);
    };

    const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
    if (threads == 1) {
        for (const auto& job : jobs) run_job(job);
    } else {
        // Each job writes a disjoint cell block, so workers need no locking.
        std::vector<std::jthread> workers;
        for (int t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                for (std::size_t k = static_cast<std::size_t>(t); k < jobs.size(); k += static_cast<std::size_t>(threads))
                    run_job(jobs[k]);
            });
        }
    }
    return h;
}

std::uint64_t sliding_patch_count(const CompiledNet& net, int fov_side, const SlidingOptions& options)
{
    const auto& geo = net.geometry();
    const int stride = options.stride == 0 ? geo.output_stride_px : options.stride;
    if (fov_side < geo.canonical_patch_px) return 0;
    if (options.tile_cells > 1) {
        const int cells = geo.output_cells(fov_side);
        const auto tiles = static_cast<std::uint64_t>((cells + options.tile_cells - 1) / options.tile_cells);
        return tiles * tiles;
    }
    const auto per_axis = static_cast<std::uint64_t>((fov_side - geo.canonical_patch_px) / stride + 1);
    return per_axis * per_axis;
}

tensor::Tensor random_fov(int side, int channels, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    tensor::Tensor t(side, side, channels);
    for (float& v : t.data()) v = u(rng);
    return t;
}

EquivalenceReport check_equivalence(const CompiledNet& net, int fov_side, int trials, std::uint64_t seed,
                                    int tile_cells)
{
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
    EquivalenceReport report;
    report.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const auto fov = random_fov(fov_side, net.graph().input_channels(), seed + static_cast<std::uint64_t>(t));
        const Heatmap full = run_naive_fcn(net, fov);
        SlidingOptions opts;
        opts.tile_cells = tile_cells;
        const Heatmap slid = run_sliding_window(net, fov, opts);
        report.grid_side = full.rows;
        for (std::size_t i = 0; i < full.values.size(); ++i) {
            report.max_abs_diff =
                std::max(report.max_abs_diff, std::abs(static_cast<double>(full.values[i]) - slid.values[i]));
        }
    }
    report.pass = report.max_abs_diff <= kEquivalenceTolerance;
    return report;
}

Heatmap artifact_map(const CompiledNet& net, const tensor::Tensor& fov, int tile_cells)
{
    const Heatmap full = run_naive_fcn(net, fov);
    SlidingOptions opts;
    opts.tile_cells = tile_cells;
    const Heatmap slid = run_sliding_window(net, fov, opts);
    Heatmap diff = full;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = std::abs(full.values[i] - slid.values[i]);
    return diff;
}

} // namespace arm::infer
