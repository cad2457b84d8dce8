#include <doctest.h>

#include <random>
#include <sstream>
#include <thread>

#include "arm/common/error.hpp"
#include "arm/net/builders.hpp"
#include "arm/pipeline/pipeline.hpp"
#include "arm/scope/demo.hpp"

using namespace arm::pipeline;
using namespace arm::scope;

namespace {

const DemoSlideOptions kDemo{};

std::shared_ptr<const ModelRegistry> registry()
{
    auto reg = std::make_shared<ModelRegistry>();
    reg->add(std::make_shared<const arm::infer::CompiledNet>(arm::net::build_color_detector(kTumorRgb, kTumorTolerance, "10X")));
    return reg;
}

std::unique_ptr<ScopeSession> demo_session_ptr(int cell)
{
    auto slide = std::make_shared<const VirtualSlide>(make_demo_slide("demo", 7, kDemo).slide);
    auto s = std::make_unique<ScopeSession>(slide, registry(), "10X");
    s->set_pose(cell_pose(kDemo, cell));
    return s;
}

constexpr int kStages = arm::pipeline::kStageCount;

PipelineConfig synthetic(ExecMode mode, QueuePolicy q = QueuePolicy::Lossless)
{
    PipelineConfig c;
    c.mode = mode;
    c.queue_policy = q;
    c.fov_px = 64;
    c.synthetic_stage_delays_ms = {10, 20, 30, 20, 10};
    return c;
}

} // namespace

TEST_CASE("focus gate")
{
    CHECK_FALSE(focus_gate(0.0, 0.5).overlay_allowed);
    CHECK(focus_gate(0.0, 0.5).notice == kOutOfFocusNotice);
    CHECK(focus_gate(0.5, 0.5).overlay_allowed);
    CHECK(focus_gate(0.9, 0.5).notice.empty());
    CHECK(focus_score(arm::tensor::Tensor(16, 16, 3, 0.4f)) == 0.0);

    auto sp = demo_session_ptr(0);
    auto& s = *sp;
    const auto rgb = debayer(s.capture(256).raw);
    CHECK(focus_gate(focus_score(rgb), 0.5).overlay_allowed);
}

TEST_CASE("channel policies")
{
    std::stop_source src;
    Channel<int> lossy(QueuePolicy::LatestWins);
    CHECK(lossy.push(1, src.get_token()));
    CHECK(lossy.push(2, src.get_token()));
    CHECK(lossy.dropped() == 1);
    CHECK(lossy.pop(src.get_token()) == 2);
    lossy.close();
    CHECK_FALSE(lossy.pop(src.get_token()));

    Channel<int> strict(QueuePolicy::Lossless);
    CHECK(strict.push(1, src.get_token()));
    std::jthread consumer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        CHECK(strict.pop(src.get_token()) == 1);
    });
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(strict.push(2, src.get_token())); // blocks until the consumer takes 1
    CHECK(std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(15));
    consumer.join();
    CHECK(strict.dropped() == 0);
    CHECK(strict.pop(src.get_token()) == 2);

    std::jthread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        src.request_stop();
    });
    CHECK_FALSE(strict.pop(src.get_token()));
}

TEST_CASE("sequential and pipelined throughput follow the queueing laws")
{
    auto sp = demo_session_ptr(0);
    auto& s = *sp;
    const auto seq = run_pipeline(synthetic(ExecMode::Sequential), s, 12);
    CHECK(seq.fps == doctest::Approx(1000.0 / 90).epsilon(0.15));
    const auto pipe = run_pipeline(synthetic(ExecMode::Pipelined), s, 24);
    CHECK(pipe.fps == doctest::Approx(1000.0 / 30).epsilon(0.15));
    MESSAGE("sequential fps " << seq.fps << ", pipelined fps " << pipe.fps);

    const auto one_seq = run_pipeline(synthetic(ExecMode::Sequential), s, 1);
    const auto one_pipe = run_pipeline(synthetic(ExecMode::Pipelined), s, 1);
    CHECK(one_pipe.latency_ms_mean == doctest::Approx(one_seq.latency_ms_mean).epsilon(0.2));
}

TEST_CASE("lossless pipelined frames are gapless, ordered and well timed")
{
    auto sp = demo_session_ptr(0);
    auto& s = *sp;
    std::vector<FrameResult> out;
    auto cfg = synthetic(ExecMode::Pipelined);
    cfg.synthetic_stage_delays_ms = {2, 3, 4, 6, 2, 1};
    const auto stats = run_pipeline(cfg, s, 15, [&](FrameResult&& f) { out.push_back(std::move(f)); });
    REQUIRE(out.size() == 15);
    CHECK(stats.frames_dropped == 0);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i].frame.seq == out[i - 1].frame.seq + 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& t = stats.frames[i];
        CHECK(t.seq == out[i].frame.seq);
        double longest = 0;
        for (int k = 0; k < kStages; ++k) {
            CHECK(t.start_ms[k] <= t.end_ms[k]);
            if (k > 0) CHECK(t.end_ms[k - 1] <= t.start_ms[k]);
            longest = std::max(longest, t.end_ms[k] - t.start_ms[k]);
        }
        CHECK(t.latency_ms() == t.end_ms[kStages - 1] - t.start_ms[0]);
        CHECK(out[i].latency_ms() == t.latency_ms());
        CHECK(t.latency_ms() >= longest);
        CHECK(out[i].heatmap.source_fov_seq == out[i].frame.seq);
        CHECK(!out[i].overlay_json.empty());
    }
}

TEST_CASE("latest_wins drops stale frames without deadlock")
{
    auto sp = demo_session_ptr(0);
    auto& s = *sp;
    std::vector<std::uint64_t> seqs;
    auto cfg = synthetic(ExecMode::Pipelined, QueuePolicy::LatestWins);
    cfg.synthetic_stage_delays_ms = {2, 1, 1, 25, 1, 1};
    const auto stats = run_pipeline(cfg, s, 40, [&](FrameResult&& f) { seqs.push_back(f.frame.seq); });
    CHECK(stats.frames_dropped > 0);
    CHECK(seqs.size() + stats.frames_dropped == 40);
    for (std::size_t i = 1; i < seqs.size(); ++i) CHECK(seqs[i] > seqs[i - 1]);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0.0, 8.0);
    for (int trial = 0; trial < 8; ++trial) {
        for (QueuePolicy q : {QueuePolicy::LatestWins, QueuePolicy::Lossless}) {
            auto c = synthetic(ExecMode::Pipelined, q);
            c.synthetic_stage_delays_ms.assign(kStages, 0.0);
            for (auto& v : c.synthetic_stage_delays_ms) v = d(rng);
            const auto st = run_pipeline(c, s, 10);
            CHECK(st.frames.size() + st.frames_dropped == 10);
            CHECK_FALSE(st.interrupted);
        }
    }
}

TEST_CASE("overlay rules: outline, no-model and out of focus")
{
    PipelineConfig cfg;
    cfg.fov_px = 256;
    cfg.mode = ExecMode::Sequential;
    auto sp = demo_session_ptr(0);
    auto& s = *sp; // tumour cell
    FrameResult last;
    run_pipeline(cfg, s, 1, [&](FrameResult&& f) { last = std::move(f); });
    CHECK(last.has_model);
    CHECK(last.gate.overlay_allowed);
    CHECK_FALSE(last.overlay.polygons.empty());
    CHECK(last.overlay.texts.size() == 1);
    CHECK(last.notices.empty());

    auto pose = cell_pose(kDemo, 0);
    pose.focus_z = 6.0;
    s.set_pose(pose);
    run_pipeline(cfg, s, 1, [&](FrameResult&& f) { last = std::move(f); });
    CHECK_FALSE(last.gate.overlay_allowed);
    CHECK(last.overlay.polygons.empty());
    CHECK(last.notices == std::vector<std::string>{kOutOfFocusNotice});

    pose.focus_z = 0.0;
    s.set_pose(pose);
    CHECK_FALSE(s.set_objective("4X").has_model);
    run_pipeline(cfg, s, 1, [&](FrameResult&& f) { last = std::move(f); });
    CHECK_FALSE(last.has_model);
    CHECK(last.overlay.mode == arm::overlay::DisplayMode::Off);
    CHECK(last.notices == std::vector<std::string>{kNoModelNotice});
    CHECK(last.heatmap.empty());
}

TEST_CASE("inference consumes the debayered frame at capture size")
{
    PipelineConfig cfg;
    cfg.fov_px = 96;
    auto sp = demo_session_ptr(0);
    auto& s = *sp;
    FrameResult last;
    run_pipeline(cfg, s, 1, [&](FrameResult&& f) { last = std::move(f); });
    CHECK(last.frame.rgb.height() == 96);
    CHECK(last.frame.rgb.width() == 96);
    CHECK(last.heatmap.rows == last.heatmap.geometry.output_cells(96));
}

TEST_CASE("stop request ends an open-ended run")
{
    auto sp = demo_session_ptr(0);
    auto& s = *sp;
    for (ExecMode m : {ExecMode::Sequential, ExecMode::Pipelined}) {
        auto cfg = synthetic(m);
        cfg.synthetic_stage_delays_ms = {5};
        std::stop_source src;
        std::jthread stopper([&] {
            std::this_thread::sleep_for(std::chrono::milliseconds(120));
            src.request_stop();
        });
        const auto stats = run_pipeline(cfg, s, 0, {}, src.get_token());
        CHECK(stats.interrupted);
        CHECK(stats.frames.size() > 3);
    }
}

TEST_CASE("real workload: FCN beats sliding window in both modes")
{
    auto reg = std::make_shared<ModelRegistry>();
    arm::net::MiniInceptionConfig mc;
    mc.objective_tag = "10X";
    reg->add(std::make_shared<const arm::infer::CompiledNet>(arm::net::build_mini_inception(0, mc)));
    auto slide = std::make_shared<const VirtualSlide>(make_demo_slide("demo", 7, kDemo).slide);
    ScopeSession s(slide, reg, "10X");
    s.set_pose(cell_pose(kDemo, 0));

    PipelineConfig base;
    base.fov_px = 64;
    const auto rows = bench(fig2c_matrix(base), s, 3, 3);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].config == "sequential+sliding");
    CHECK(rows[3].config == "pipelined+fcn");
    CHECK(rows[1].fps_mean > rows[0].fps_mean);
    CHECK(rows[3].fps_mean > rows[2].fps_mean);
    CHECK(rows[1].latency_ms_mean < rows[0].latency_ms_mean);
    CHECK(rows[3].latency_ms_mean < rows[2].latency_ms_mean);
    CHECK(rank_by_fps(rows).back().config.find("sliding") != std::string::npos);

    std::ostringstream csv;
    write_bench_csv(csv, rows);
    const std::string text = csv.str();
    CHECK(text.rfind("config,latency_ms_mean,latency_ms_sd,fps_mean,fps_sd,frames_dropped\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK_THROWS_AS(bench(fig2c_matrix(base), s, 1, 3), arm::Error);
}
