// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "arm/app/demo_data.hpp"
#include "arm/eval/dataset.hpp"
#include "arm/eval/hsd.hpp"
#include "arm/infer/modes.hpp"
#include "arm/net/builders.hpp"
#include "arm/net/geometry.hpp"
#include "arm/overlay/contours.hpp"
#include "arm/pipeline/pipeline.hpp"
#include "unit/graph_gen.hpp"

namespace fs = std::filesystem;
using namespace arm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o)
{
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(24) << name << o.detail << std::endl;
    failures += !o.pass;
}

template <typename F>
void run(const std::string& name, F&& f)
{
    try {
        report(name, f());
    } catch (const std::exception& e) {
        report(name, {false, std::string("exception: ") + e.what()});
    }
}

double max_diff(const infer::Heatmap& a, const infer::Heatmap& b)
{
    if (a.rows != b.rows || a.cols != b.cols) return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.values[i]) - b.values[i]));
    return m;
}

Outcome fcn_consistency()
{
    const auto t0 = Clock::now();
    double worst = 0;
    int runs = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const infer::CompiledNet net(net::build_mini_inception(seed));
        const auto& g = net.geometry();
        for (int m = 0; m <= 4; ++m) {
            const auto fov = infer::random_fov(g.canonical_patch_px + m * g.output_stride_px, 3, seed * 10 + m);
            worst = std::max(worst, max_diff(infer::run_fcn(net, fov), infer::run_sliding_window(net, fov)));
            ++runs;
        }
    }
    const double t = seconds_since(t0);
    std::ostringstream d;
    d << runs << " FOVs over 20 seeds, max_abs_diff " << worst << ", " << t << " s";
    return {worst <= infer::kEquivalenceTolerance && t < 60.0, d.str()};
}

Outcome artifact()
{
    const int tile = 4;
    const infer::CompiledNet same(
        net::build_mini_inception(0).with_padding(net::kMiniInceptionStem, tensor::Padding::Same));
    const auto diff = infer::artifact_map(same, infer::random_fov(96, 3, 11), tile);
    auto hot = [&](int r, int c) { return diff.at(r, c) > 1e-4; };
    double peak = 0;
    int interior = 0, interior_hot = 0;
    for (int r = 0; r < diff.rows; ++r)
        for (int c = 0; c < diff.cols; ++c) {
            peak = std::max(peak, static_cast<double>(diff.at(r, c)));
            const bool inside = r % tile != 0 && r % tile != tile - 1 && c % tile != 0 && c % tile != tile - 1;
            interior += inside;
            interior_hot += inside && hot(r, c);
        }
    // Every seam between neighbouring tiles, in both directions, shows up.
    int seams = 0, seams_hot = 0;
    for (int b = tile; b < diff.rows; b += tile) {
        bool row_seam = false, col_seam = false;
        for (int k = 0; k < diff.cols; ++k) row_seam |= hot(b - 1, k) || hot(b, k);
        for (int k = 0; k < diff.rows; ++k) col_seam |= hot(k, b - 1) || hot(k, b);
        seams += 2;
        seams_hot += row_seam + col_seam;
    }
    std::ostringstream d;
    d << "peak |naive - sliding| " << peak << "; period " << tile << " cells: " << seams_hot << "/" << seams
      << " tile seams nonzero, " << interior_hot << "/" << interior << " tile-interior cells nonzero";
    return {peak > 1e-2 && seams > 0 && seams_hot == seams && interior_hot == 0, d.str()};
}

// FCN shares work only when a layer with overlapping windows (kernel > stride)
// reads the output of an earlier spatial layer, and no layer skips inputs
// (stride > kernel), which FCN would compute and then discard.
bool shares_computation(const net::NetGraph& g)
{
    std::map<std::string, int> depth;
    bool overlap = false, skips = false;
    for (const auto& l : g.layers()) {
        int d = 0;
        for (const auto& in : l.inputs) d = std::max(d, depth[in]);
        overlap |= l.kernel > l.stride && d >= 1;
        skips |= l.stride > l.kernel;
        depth[l.name] = d + (l.kernel > 1);
    }
    return overlap && !skips;
}

Outcome flop_reduction()
{
    int checked = 0, violations = 0, excluded = 0, excluded_violating = 0;
    auto compare = [](const net::NetGraph& g, int& n) {
        const auto geo = net::compute_geometry(g);
        int bad = 0;
        for (int m : {1, 3, 10}) {
            const int side = geo.canonical_patch_px + m * geo.output_stride_px;
            ++n;
            bad += net::count_flops(g, side) >= net::count_sliding_flops(g, side, geo.output_stride_px);
        }
        return bad;
    };
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        gen::RandomGraph rg(seed);
        const auto g = rg.build(1 + static_cast<int>(seed % 5));
        const auto geo = net::compute_geometry(g);
        if (geo.receptive_field_px <= geo.output_stride_px) continue;
        if (!shares_computation(g)) {
            int n = 0;
            ++excluded;
            excluded_violating += compare(g, n) > 0;
            continue;
        }
        violations += compare(g, checked);
    }
    for (int stages = 0; stages <= 2; ++stages)
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            net::MiniInceptionConfig mc;
            mc.reduction_stages = stages;
            mc.calibrate = false;
            violations += compare(net::build_mini_inception(seed, mc), checked);
        }
    auto cfg = net::mini_inception_config_for_patch(911, 3);
    cfg.calibrate = false;
    const auto big = net::build_mini_inception(0, cfg);
    const auto geo = net::compute_geometry(big);
    const double fcn = static_cast<double>(net::count_flops(big, 5120));
    const double sliding = static_cast<double>(net::count_sliding_flops(big, 5120, geo.output_stride_px));
    const double reduction = 1.0 - fcn / sliding;
    std::ostringstream d;
    d << checked << " graph/size pairs with r > j and shared windows, " << violations << " violations ("
      << excluded_violating << "/" << excluded << " random graphs without shared windows do not save work); p="
      << geo.canonical_patch_px << " j=" << geo.output_stride_px << " FOV 5120: reduction " << std::fixed
      << std::setprecision(2)
      << 100 * reduction << "% (paper claims 75%)";
    return {violations == 0 && checked > 0 && reduction >= 0.60, d.str()};
}

std::shared_ptr<const scope::ModelRegistry> single_model(const net::NetGraph& g)
{
    auto reg = std::make_shared<scope::ModelRegistry>();
    reg->add(std::make_shared<const infer::CompiledNet>(g));
    return reg;
}

Outcome pipeline_laws()
{
    scope::DemoSlideOptions layout;
    const auto demo = std::make_shared<const scope::VirtualSlide>(scope::make_demo_slide("bench", 3, layout).slide);

    scope::ScopeSession light(demo, app::demo_registry(), "10X");
    light.set_pose(scope::cell_pose(layout, 0));
    pipeline::PipelineConfig syn;
    syn.fov_px = 64;
    syn.synthetic_stage_delays_ms = {10, 20, 30, 20, 10};
    syn.mode = pipeline::ExecMode::Sequential;
    const double seq_fps = pipeline::run_pipeline(syn, light, 12).fps;
    syn.mode = pipeline::ExecMode::Pipelined;
    const double pipe_fps = pipeline::run_pipeline(syn, light, 24).fps;
    const bool synthetic_ok =
        std::abs(seq_fps - 1000.0 / 90) <= 0.15 * 1000.0 / 90 && std::abs(pipe_fps - 1000.0 / 30) <= 0.15 * 1000.0 / 30;

    net::MiniInceptionConfig mc;
    mc.objective_tag = "10X";
    scope::ScopeSession real(demo, single_model(net::build_mini_inception(1, mc)), "10X");
    real.set_pose(scope::cell_pose(layout, 0));
    pipeline::PipelineConfig base;
    base.fov_px = 64;
    const auto rows = pipeline::bench(pipeline::fig2c_matrix(base), real, 30, 4);
    auto find = [&](const std::string& name) -> const pipeline::BenchRow& {
        for (const auto& r : rows)
            if (r.config == name) return r;
        throw std::runtime_error("missing bench row " + name);
    };
    const auto& sf = find("sequential+fcn");
    const auto& ss = find("sequential+sliding");
    const auto& pf = find("pipelined+fcn");
    const auto& ps = find("pipelined+sliding");
    const bool order = pf.fps_mean > ps.fps_mean && sf.fps_mean > ss.fps_mean &&
                       pf.latency_ms_mean < ps.latency_ms_mean && sf.latency_ms_mean < ss.latency_ms_mean;
    std::ostringstream d;
    d << std::fixed << std::setprecision(1) << "synthetic seq " << seq_fps << " fps (11.1), pipelined " << pipe_fps
      << " fps (33.3); 30 reps fps/latency: seq+fcn " << sf.fps_mean << "/" << sf.latency_ms_mean << "ms seq+sliding "
      << ss.fps_mean << "/" << ss.latency_ms_mean << "ms pipe+fcn " << pf.fps_mean << "/" << pf.latency_ms_mean
      << "ms pipe+sliding " << ps.fps_mean << "/" << ps.latency_ms_mean << "ms";
    return {synthetic_ok && order, d.str()};
}

Outcome geometry_oracle()
{
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        gen::RandomGraph rg(seed);
        const infer::CompiledNet net(rg.build(1 + static_cast<int>(seed % 5)));
        const auto& geo = net.geometry();
        const auto probe = gen::occlusion_probe(net, geo.canonical_patch_px);
        mismatches += probe.receptive_field != geo.receptive_field_px || probe.stride != geo.output_stride_px ||
                      gen::search_canonical_patch(net) != geo.canonical_patch_px;
    }
    return {mismatches == 0, "50 random graphs, " + std::to_string(mismatches) + " mismatches"};
}

std::vector<eval::LabeledFOV> random_dataset(std::mt19937_64& rng, int n)
{
    std::uniform_int_distribution<int> coarse(0, 20);
    std::vector<eval::LabeledFOV> d(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d[i].label = i % 2 ? eval::Label::Tumor : eval::Label::Benign;
        d[i].score = coarse(rng) / 20.0 + (d[i].label == eval::Label::Tumor ? 0.1 : 0.0); // ties on purpose
    }
    return d;
}

Outcome metrics_oracle()
{
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> size(2, 200);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const auto d = random_dataset(rng, size(rng));
        worst = std::max(worst, std::abs(eval::roc_curve(d).auc - eval::auc_pair_counting(d)));
    }
    eval::ConfusionCounts c;
    c.tp = 3;
    c.tn = 2;
    c.fp = 1;
    c.fn = 4;
    const auto m = eval::metrics(c);
    const bool spot = *m.accuracy == 0.5 && *m.precision == 0.75 && std::abs(*m.recall - 3.0 / 7.0) < 1e-15;

    const auto small = random_dataset(rng, 60);
    const auto a = eval::bootstrap_ci(small, eval::auc_statistic, 500, 42);
    const auto b = eval::bootstrap_ci(small, eval::auc_statistic, 500, 42);
    const bool reproducible = a.lo == b.lo && a.hi == b.hi && a.skipped == b.skipped;

    const auto large = random_dataset(rng, 500);
    const auto t0 = Clock::now();
    eval::bootstrap_ci(large, eval::auc_statistic, 5000, 1);
    const double t = seconds_since(t0);

    std::ostringstream d;
    d << "100 datasets max |trapezoid - pairs| " << worst << ", spot " << (spot ? "ok" : "wrong") << ", bootstrap "
      << (reproducible ? "bit-identical" : "differs") << ", 5000x500 in " << t << " s";
    return {worst <= 1e-9 && spot && reproducible && t < 30.0, d.str()};
}

Outcome end_to_end()
{
    const fs::path dir = fs::temp_directory_path() / "arm_acceptance_demo";
    fs::remove_all(dir);
    app::DemoDataOptions opt;
    const auto data = app::write_demo(dir, opt);
    const auto manifest = eval::read_manifest(dir / "manifest.csv");
    const double auc = eval::roc_curve(manifest).auc;

    std::size_t cells = 0, wrong = 0, tumors = 0, measured = 0;
    double worst_rel = 0;
    const float t = 0.5f;
    const double um_per_px = scope::make_objective(opt.objective).um_per_px;
    for (const auto& f : data.fovs) {
        const auto mask = overlay::threshold_heatmap(f.heatmap, t);
        const auto labels = overlay::connected_components(mask);
        const auto loops = overlay::trace_contours(labels, f.heatmap.geometry);
        for (int r = 0; r < mask.rows; ++r)
            for (int c = 0; c < mask.cols; ++c) {
                const auto p = overlay::grid_to_fov(f.heatmap.geometry, c + 0.5, r + 0.5);
                ++cells;
                wrong += overlay::inside_contours(loops, p) != mask.at(r, c);
            }
        if (f.blob.kind != scope::BlobKind::Tumor) continue;
        ++tumors;
        const auto meas = overlay::measure_largest_focus(labels, loops, um_per_px);
        if (!meas) {
            worst_rel = INFINITY;
            continue;
        }
        ++measured;
        const double truth_mm = 2.0 * f.blob.rx * data.slides.front().slide.base_um_per_px / 1000.0;
        worst_rel = std::max(worst_rel, std::abs(meas->diameter_mm - truth_mm) / truth_mm);
    }
    fs::remove_all(dir);
    std::ostringstream d;
    d << manifest.size() << " FOVs AUC " << auc << "; " << cells << " cells, " << wrong
      << " point-in-polygon mismatches; " << measured << "/" << tumors << " tumour diameters, worst error "
      << std::setprecision(3) << 100 * worst_rel << "%";
    return {auc == 1.0 && wrong == 0 && measured == tumors && tumors > 0 && worst_rel <= 0.02, d.str()};
}

Outcome hsd_properties()
{
    double gray = 0;
    for (int v = 1; v <= 255; v += 7) gray = std::max(gray, eval::hsd_transform(v, v, v).point.saturation);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> od(0.05, 1.5), k(0.2, 5.0);
    double drift = 0;
    for (int i = 0; i < 1000; ++i) {
        const double r = od(rng), g = od(rng), b = od(rng), s = k(rng);
        const auto p = eval::hsd_from_od(r, g, b);
        const auto q = eval::hsd_from_od(s * r, s * g, s * b);
        drift = std::max({drift, eval::hue_distance(p.hue, q.hue), std::abs(p.saturation - q.saturation)});
    }

    scope::DemoSlideOptions layout;
    std::vector<eval::NamedImage> pink, purple;
    for (int i = 0; i < 3; ++i) {
        layout.family = scope::StainFamily::Pink;
        pink.push_back({"pink", scope::make_demo_slide("p", 100 + i, layout).slide.image});
        layout.family = scope::StainFamily::Purple;
        purple.push_back({"purple", scope::make_demo_slide("q", 200 + i, layout).slide.image});
    }
    auto mean_hue = [](const eval::ColorSummary& s) {
        double cx = 0, cy = 0;
        for (const auto& r : s.rows) {
            cx += std::cos(r.mean.hue);
            cy += std::sin(r.mean.hue);
        }
        return std::atan2(cy, cx);
    };
    const double sep = eval::hue_distance(mean_hue(eval::color_summary(pink)), mean_hue(eval::color_summary(purple)));
    std::ostringstream d;
    d << "gray saturation " << gray << ", OD-scaling drift " << drift << ", family hue separation " << sep << " rad";
    return {gray <= 1e-12 && drift <= 1e-9 && sep > 0.3, d.str()};
}

Outcome no_secondary()
{
    const fs::path src = ARM_SOURCE_DIR;
    for (const char* p : {"viewer", "web", "package.json", "tsconfig.json", "node_modules"})
        if (fs::exists(src / p)) return {false, std::string("found ") + p + " in the source tree"};
    return {true, "this binary links only the C++ libraries; no viewer sources or targets in the tree"};
}

} // namespace

int main()
{
    run("fcn_consistency", fcn_consistency);
    run("artifact_demonstration", artifact);
    run("compute_reduction", flop_reduction);
    run("pipeline_laws", pipeline_laws);
    run("geometry_oracle", geometry_oracle);
    run("metrics_oracle", metrics_oracle);
    run("end_to_end_demo", end_to_end);
    run("hsd_properties", hsd_properties);
    run("no_secondary_component", no_secondary);
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}
