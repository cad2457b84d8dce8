#include "arm/app/demo_data.hpp"

#include <fstream>

#include "arm/common/error.hpp"
#include "arm/common/png_io.hpp"
#include "arm/eval/dataset.hpp"
#include "arm/infer/modes.hpp"
#include "arm/net/io.hpp"
#include "arm/scope/capture.hpp"

namespace arm::app {

namespace fs = std::filesystem;

net::NetGraph demo_detector(const std::string& objective_tag)
{
    return net::build_color_detector(scope::kTumorRgb, scope::kTumorTolerance, objective_tag);
}

std::shared_ptr<scope::ModelRegistry> demo_registry()
{
    auto reg = std::make_shared<scope::ModelRegistry>();
    for (const auto& tag : kDemoModelObjectives)
        reg->add(std::make_shared<const infer::CompiledNet>(demo_detector(tag)));
    return reg;
}

tensor::Tensor capture_cell(const scope::DemoSlide& slide, const std::shared_ptr<const scope::ModelRegistry>& models,
                            const scope::DemoSlideOptions& layout, int cell, int fov_px, const std::string& objective)
{
    scope::ScopeSession s(std::make_shared<const scope::VirtualSlide>(slide.slide), models, objective);
    s.set_pose(scope::cell_pose(layout, cell));
    return scope::debayer(s.capture(fov_px).raw);
}

namespace {

DemoData build(const DemoDataOptions& o, const fs::path* out)
{
    const auto models = demo_registry();
    const auto model = models->find(o.objective);
    if (!model) throw Error(ErrorCode::NotFound, "no demo model for objective " + o.objective);

    DemoData data;
    std::uint64_t k = 0;
    for (auto family : {scope::StainFamily::Pink, scope::StainFamily::Purple}) {
        for (int i = 0; i < o.slides_per_family; ++i, ++k) {
            auto opt = o.slide;
            opt.family = family;
            const std::string id = std::string(family == scope::StainFamily::Pink ? "pink-" : "purple-") + std::to_string(i);
            data.slides.push_back(scope::make_demo_slide(id, o.seed * 1000 + k, opt));
        }
    }
    if (out) {
        for (const auto& s : data.slides) scope::save_slide(*out / "slides", s.slide);
        fs::create_directories(*out / "fovs");
        fs::create_directories(*out / "heatmaps");
    }

    for (const auto& slide : data.slides) {
        const auto shared = std::make_shared<const scope::VirtualSlide>(slide.slide);
        scope::ScopeSession session(shared, models, o.objective);
        for (int c = 0; c < static_cast<int>(slide.blobs.size()); ++c) {
            const auto& blob = slide.blobs[c];
            if (blob.kind == scope::BlobKind::Empty) continue;
            session.set_pose(scope::cell_pose(o.slide, c));
            const auto rgb = scope::debayer(session.capture(o.fov_px).raw);
            const auto heat = infer::run_fcn(*model, rgb);

            DemoFov f;
            f.fov_id = slide.slide.id + "_c" + std::to_string(c);
            f.slide_id = slide.slide.id;
            f.cell = c;
            f.blob = blob;
            f.labeled.id = f.fov_id;
            f.labeled.label = blob.kind == scope::BlobKind::Tumor ? eval::Label::Tumor : eval::Label::Benign;
            f.labeled.score = eval::fov_likelihood(heat);
            f.labeled.magnification = o.objective;
            f.labeled.source = slide.slide.id;
            if (out) {
                f.labeled.heatmap_path = "heatmaps/" + f.fov_id + ".png";
                f.labeled.image_path = "fovs/" + f.fov_id + ".png";
                infer::export_heatmap(heat, *out / f.labeled.heatmap_path);
                write_png_rgb8(*out / f.labeled.image_path, rgb);
            }
            f.heatmap = heat;
            data.fovs.push_back(std::move(f));
        }
    }
    return data;
}

} // namespace

DemoData build_demo_data(const DemoDataOptions& options) { return build(options, nullptr); }

DemoData write_demo(const fs::path& out, const DemoDataOptions& options)
{
    fs::create_directories(out / "slides");
    fs::create_directories(out / "models" / "bench");
    for (const auto& tag : kDemoModelObjectives) {
        const fs::path graph = out / "models" / ("detector_" + tag + ".json");
        net::save_graph(demo_detector(tag), graph, net::weights_path_for(graph));
    }
    net::MiniInceptionConfig mc;
    mc.objective_tag = options.objective;
    const auto bench = net::build_mini_inception(options.seed, mc);
    const fs::path bench_path = out / "models" / kBenchModelPath;
    net::save_graph(bench, bench_path, net::weights_path_for(bench_path));
    const fs::path same_path = out / "models" / kBenchSameModelPath;
    net::save_graph(bench.with_padding(net::kMiniInceptionStem, tensor::Padding::Same), same_path,
                    net::weights_path_for(same_path));

    auto data = build(options, &out);
    std::vector<eval::LabeledFOV> rows;
    for (const auto& f : data.fovs) rows.push_back(f.labeled);
    std::ofstream manifest(out / "manifest.csv");
    if (!manifest) throw Error(ErrorCode::Io, "cannot write " + (out / "manifest.csv").string());
    eval::write_manifest(manifest, rows);
    return data;
}

} // namespace arm::app
