#include "arm/app/cli.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>

#include "arm/app/demo_data.hpp"
#include "arm/common/error.hpp"
#include "arm/common/png_io.hpp"
#include "arm/eval/dataset.hpp"
#include "arm/eval/hsd.hpp"
#include "arm/infer/modes.hpp"
#include "arm/net/io.hpp"
#include "arm/pipeline/pipeline.hpp"
#include "arm/service/server.hpp"

namespace arm::app {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return os;
}

std::shared_ptr<const scope::ModelRegistry> load_models(const fs::path& dir)
{
    return std::make_shared<const scope::ModelRegistry>(scope::ModelRegistry::load_dir(dir));
}

struct DemoArgs {
    fs::path out;
    std::uint64_t seed = 1;
};

int cmd_make_demo(const DemoArgs& a, std::ostream& out)
{
    DemoDataOptions o;
    o.seed = a.seed;
    const auto data = write_demo(a.out, o);
    out << "wrote " << data.slides.size() << " slides and " << data.fovs.size() << " FOVs to " << a.out.string()
        << '\n';
    return 0;
}

struct ServeArgs {
    fs::path slides, models;
    unsigned short port = 8080;
    int fov = 512;
};

int cmd_serve(const ServeArgs& a, std::ostream& out)
{
    pipeline::PipelineConfig base;
    base.fov_px = a.fov;
    service::SessionManager manager(a.slides, load_models(a.models), base);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr); // server threads inherit the mask

    service::Server server(manager, {"127.0.0.1", a.port});
    const auto port = server.start();
    out << "listening on http://127.0.0.1:" << port << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    out << "stopped" << std::endl;
    return 0;
}

struct BenchArgs {
    fs::path slides, models, out, model;
    int fov = 512;
    int reps = 30;
    int frames = 10;
};

int cmd_bench(const BenchArgs& a, std::ostream& out)
{
    std::shared_ptr<const infer::CompiledNet> net;
    fs::path model = a.model;
    if (model.empty() && fs::exists(a.models / kBenchModelPath)) model = a.models / kBenchModelPath;
    if (!model.empty()) {
        net = std::make_shared<const infer::CompiledNet>(net::load_graph(model));
    } else {
        const auto reg = load_models(a.models);
        if (reg->empty()) throw Error(ErrorCode::NotFound, "no model in " + a.models.string());
        net = reg->find(reg->tags().front());
    }
    const std::string tag = net->graph().objective_tag().empty() ? "10X" : net->graph().objective_tag();
    auto reg = std::make_shared<scope::ModelRegistry>();
    reg->add(net);

    const auto slides = scope::list_slides(a.slides);
    if (slides.empty()) throw Error(ErrorCode::NotFound, "no slides in " + a.slides.string());
    auto slide = std::make_shared<const scope::VirtualSlide>(scope::load_slide(a.slides, slides.front().id));
    scope::ScopeSession session(slide, reg, tag);

    pipeline::PipelineConfig base;
    base.fov_px = a.fov;
    const auto rows = pipeline::bench(pipeline::fig2c_matrix(base), session, a.reps, a.frames);
    auto os = open_out(a.out);
    pipeline::write_bench_csv(os, rows);
    pipeline::write_bench_csv(out, pipeline::rank_by_fps(rows));
    return 0;
}

struct CheckArgs {
    fs::path model;
    int fov_side = 0;
    int trials = 1;
    int tile_cells = 1;
    std::uint64_t seed = 0;
};

int cmd_check(const CheckArgs& a, std::ostream& out)
{
    const infer::CompiledNet net(net::load_graph(a.model));
    const auto& g = net.geometry();
    const auto rep = infer::check_equivalence(net, a.fov_side, a.trials, a.seed, a.tile_cells);
    out << "model " << a.model.string() << '\n'
        << "receptive_field_px " << g.receptive_field_px << " output_stride_px " << g.output_stride_px
        << " fcn_safe " << (net.fcn_safe() ? "yes" : "no") << '\n'
        << "fov_side " << a.fov_side << " grid " << rep.grid_side << "x" << rep.grid_side << " trials " << rep.trials
        << '\n'
        << "max_abs_diff " << rep.max_abs_diff << '\n'
        << (rep.pass ? "PASS" : "FAIL") << " (tolerance " << infer::kEquivalenceTolerance << ")\n";
    return rep.pass ? 0 : 1;
}

struct EvalArgs {
    fs::path manifest, out, model;
    int bootstrap = 5000;
    std::uint64_t seed = 1;
};

std::string fmt_metric(const std::optional<double>& v, const std::optional<eval::MetricCI>& ci)
{
    if (!v) return "NA";
    std::ostringstream s;
    s << *v;
    if (ci) s << " [" << ci->lo << ", " << ci->hi << "]";
    return s.str();
}

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
    eval::ImageScorer scorer;
    std::shared_ptr<const infer::CompiledNet> net;
    if (!a.model.empty()) {
        net = std::make_shared<const infer::CompiledNet>(net::load_graph(a.model));
        scorer = [net](const fs::path& image) { return eval::fov_likelihood(infer::run_fcn(*net, read_png_rgb(image))); };
    }
    const auto data = eval::read_manifest(a.manifest, scorer);
    const auto roc = eval::roc_curve(data);
    auto points = eval::pick_operating_points(data);
    std::optional<eval::BootstrapResult> auc_ci;
    if (a.bootstrap > 0) {
        auc_ci = eval::bootstrap_ci(data, eval::auc_statistic, a.bootstrap, a.seed);
        eval::attach_confidence_intervals(points, data, a.bootstrap, a.seed);
    }
    fs::create_directories(a.out);
    {
        auto os = open_out(a.out / "roc.csv");
        eval::write_roc_csv(os, roc);
    }
    {
        auto os = open_out(a.out / "metrics.csv");
        eval::write_metrics_csv(os, roc.auc, auc_ci, points);
    }
    out << "fovs " << data.size() << '\n' << "auc " << roc.auc;
    if (auc_ci) out << " [" << auc_ci->lo << ", " << auc_ci->hi << "]";
    out << '\n';
    for (const auto& p : points)
        out << p.name << " threshold " << p.threshold << " accuracy " << fmt_metric(p.metrics.accuracy, p.accuracy_ci)
            << " precision " << fmt_metric(p.metrics.precision, p.precision_ci) << " recall "
            << fmt_metric(p.metrics.recall, p.recall_ci) << '\n';
    return 0;
}

struct ColorsArgs {
    fs::path slides, out;
};

int cmd_colors(const ColorsArgs& a, std::ostream& out)
{
    std::vector<eval::NamedImage> images;
    for (const auto& info : scope::list_slides(a.slides))
        images.push_back({info.id, scope::load_slide(a.slides, info.id).image});
    if (images.empty()) throw Error(ErrorCode::NotFound, "no slides in " + a.slides.string());
    const auto summary = eval::color_summary(images);
    {
        auto os = open_out(a.out);
        eval::write_colors_csv(os, summary);
    }
    const fs::path hist = a.out.parent_path() / "density_hist.csv";
    {
        auto os = open_out(hist);
        eval::write_density_hist_csv(os, summary);
    }
    for (const auto& r : summary.rows)
        out << r.image_id << " hue " << r.mean.hue << " saturation " << r.mean.saturation << " density "
            << r.mean.density << (r.excluded ? " excluded" : "") << '\n';
    out << "wrote " << a.out.string() << " and " << hist.string() << '\n';
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Augmented reality microscope toolkit", "arm"};
    app.require_subcommand(1);

    DemoArgs demo;
    auto* c_demo = app.add_subcommand("make-demo", "Write demo slides, models and a labelled FOV manifest");
    c_demo->add_option("--out", demo.out, "Output directory")->required();
    c_demo->add_option("--seed", demo.seed, "Generator seed");

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "Run the HTTP/WebSocket service until interrupted");
    c_serve->add_option("--slides", serve.slides, "Slide directory")->required()->check(CLI::ExistingDirectory);
    c_serve->add_option("--models", serve.models, "Model directory")->required()->check(CLI::ExistingDirectory);
    c_serve->add_option("--port", serve.port, "Port (0 picks a free one)");
    c_serve->add_option("--fov", serve.fov, "Default FOV side in pixels")->check(CLI::PositiveNumber);

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "Sequential/pipelined x sliding/FCN benchmark");
    c_bench->add_option("--slides", bench.slides, "Slide directory")->required()->check(CLI::ExistingDirectory);
    c_bench->add_option("--models", bench.models, "Model directory")->required()->check(CLI::ExistingDirectory);
    c_bench->add_option("--fov", bench.fov, "FOV side in pixels")->required()->check(CLI::PositiveNumber);
    c_bench->add_option("--reps", bench.reps, "Repetitions per configuration")->check(CLI::PositiveNumber);
    c_bench->add_option("--frames", bench.frames, "Frames per repetition")->check(CLI::Range(2, 100000));
    c_bench->add_option("--out", bench.out, "CSV output")->required();
    c_bench->add_option("--model", bench.model, "Model graph (default: <models>/bench/mini_inception.json)")
        ->check(CLI::ExistingFile);

    CheckArgs check;
    auto* c_check = app.add_subcommand("check", "FCN vs sliding-window equivalence report");
    c_check->add_option("--model", check.model, "Model graph JSON")->required()->check(CLI::ExistingFile);
    c_check->add_option("--fov-side", check.fov_side, "FOV side in pixels")->required()->check(CLI::PositiveNumber);
    c_check->add_option("--trials", check.trials, "Random FOVs")->required()->check(CLI::PositiveNumber);
    c_check->add_option("--tile-cells", check.tile_cells, "Outputs per training-style tile")->check(CLI::PositiveNumber);
    c_check->add_option("--seed", check.seed, "FOV seed");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "ROC, operating points and bootstrap CIs");
    c_eval->add_option("--manifest", ev.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--out", ev.out, "Output directory")->required();
    c_eval->add_option("--bootstrap", ev.bootstrap, "Bootstrap replications (0 disables)");
    c_eval->add_option("--seed", ev.seed, "Bootstrap seed");
    c_eval->add_option("--model", ev.model, "Model that scores image_path rows")->check(CLI::ExistingFile);

    ColorsArgs colors;
    auto* c_colors = app.add_subcommand("colors", "HSD colour summaries of a slide directory");
    c_colors->add_option("--slides", colors.slides, "Slide directory")->required()->check(CLI::ExistingDirectory);
    c_colors->add_option("--out", colors.out, "colors.csv path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*c_demo) return cmd_make_demo(demo, out);
        if (*c_serve) return cmd_serve(serve, out);
        if (*c_bench) return cmd_bench(bench, out);
        if (*c_check) return cmd_check(check, out);
        if (*c_eval) {
            if (ev.bootstrap != 0 && ev.bootstrap < 100) {
                err << "error: --bootstrap needs 0 or at least 100 replications\n";
                return 2;
            }
            return cmd_eval(ev, out);
        }
        if (*c_colors) return cmd_colors(colors, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

} // namespace arm::app
