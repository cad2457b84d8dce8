#include "arm/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "arm/common/error.hpp"
#include "arm/infer/modes.hpp"

namespace arm::pipeline {

using Clock = std::chrono::steady_clock;

const char* to_string(Stage s)
{
    static constexpr const char* names[] = {"capture", "debayer", "preprocess", "inference", "postprocess", "display-out"};
    return names[static_cast<int>(s)];
}

const char* to_string(ExecMode m)
{
    return m == ExecMode::Sequential ? "sequential" : "pipelined";
}

const char* to_string(InferenceMode m)
{
    return m == InferenceMode::Fcn ? "fcn" : "sliding";
}

const char* to_string(QueuePolicy q)
{
    return q == QueuePolicy::Lossless ? "lossless" : "latest_wins";
}

FocusGate focus_gate(double score, double threshold)
{
    if (score >= threshold) return {true, ""};
    return {false, kOutOfFocusNotice};
}

namespace {

double mean_of(std::span<const double> v)
{
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Stage bodies plus timing. Each stage is only ever entered by one worker.
class Runner {
public:
    Runner(const PipelineConfig& config, scope::ScopeSession& session)
        : config_(config), session_(session), epoch_(Clock::now())
    {
        if (config_.fov_px <= 0 || config_.fov_px % 2 != 0)
            throw Error(ErrorCode::InvalidArgument, "fov_px must be positive and even");
        scorer_ = config_.focus ? config_.focus : scope::laplacian_focus_scorer();
    }

    double ms(Clock::time_point t) const { return std::chrono::duration<double, std::milli>(t - epoch_).count(); }

    void pace(std::uint64_t k) const
    {
        if (config_.capture_interval_ms > 0.0)
            std::this_thread::sleep_until(epoch_ + std::chrono::duration_cast<Clock::duration>(
                                                       std::chrono::duration<double, std::milli>(config_.capture_interval_ms * k)));
    }

    void run(Stage s, FrameResult& f)
    {
        const int i = static_cast<int>(s);
        const auto t0 = Clock::now();
        if (config_.real_work) work(s, f);
        else if (s == Stage::Capture) f.frame.seq = placeholder_seq_++;
        if (i < static_cast<int>(config_.synthetic_stage_delays_ms.size()) && config_.synthetic_stage_delays_ms[i] > 0.0)
            std::this_thread::sleep_until(t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(
                                                   config_.synthetic_stage_delays_ms[i])));
        f.frame.stage_start_ms[i] = ms(t0);
        f.frame.stage_end_ms[i] = ms(Clock::now());
    }

private:
    void work(Stage s, FrameResult& f)
    {
        switch (s) {
        case Stage::Capture:
            f.frame = session_.capture(config_.fov_px);
            break;
        case Stage::Debayer:
            f.frame.rgb = scope::debayer(f.frame.raw);
            break;
        case Stage::Preprocess: {
            const auto& rgb = f.frame.rgb;
            if (gain_.height() != rgb.height() || gain_.width() != rgb.width())
                gain_ = tensor::Tensor(rgb.height(), rgb.width(), 1, 1.0f);
            f.frame.rgb = scope::flat_field_white_balance(rgb, gain_, config_.wb_gains);
            f.frame.focus_score = scorer_(f.frame.rgb);
            f.gate = focus_gate(f.frame.focus_score, config_.focus_threshold);
            break;
        }
        case Stage::Inference:
            f.has_model = f.frame.model != nullptr;
            if (f.has_model) {
                const auto& net = *f.frame.model;
                if (config_.inference_mode == InferenceMode::Fcn) {
                    f.heatmap = net.fcn_safe() ? infer::run_fcn(net, f.frame.rgb) : infer::run_naive_fcn(net, f.frame.rgb);
                } else {
                    infer::SlidingOptions opt;
                    opt.threads = config_.inference_threads;
                    f.heatmap = infer::run_sliding_window(net, f.frame.rgb, opt);
                }
                f.heatmap.source_fov_seq = f.frame.seq;
            }
            break;
        case Stage::Postprocess: {
            const int w = f.frame.rgb.width();
            const int h = f.frame.rgb.height();
            auto opt = config_.overlay_source ? config_.overlay_source() : config_.overlay;
            f.overlay.mode = opt.mode;
            f.overlay.color_space = opt.color_space;
            if (!f.has_model) {
                f.overlay.mode = overlay::DisplayMode::Off;
                f.notices.push_back(kNoModelNotice);
            } else if (!f.gate.overlay_allowed) {
                f.notices.push_back(f.gate.notice);
            } else {
                opt.um_per_px = f.frame.objective.um_per_px;
                f.overlay = overlay::build_overlay(f.heatmap, w, h, opt);
            }
            break;
        }
        case Stage::DisplayOut:
            f.overlay_json = overlay::to_json(f.overlay).dump();
            break;
        }
    }

    const PipelineConfig& config_;
    scope::ScopeSession& session_;
    Clock::time_point epoch_;
    scope::FocusScorer scorer_;
    tensor::Tensor gain_;
    std::uint64_t placeholder_seq_ = 0;
};

FrameTimings timings_of(const FrameResult& f)
{
    return {f.frame.seq, f.frame.stage_start_ms, f.frame.stage_end_ms};
}

} // namespace

PipelineStats summarize(std::span<const FrameTimings> frames, std::uint64_t captured, std::uint64_t dropped)
{
    PipelineStats s;
    s.frames.assign(frames.begin(), frames.end());
    s.frames_captured = captured;
    s.frames_dropped = dropped;
    if (frames.empty()) return s;
    std::vector<double> lat;
    for (const auto& f : frames) lat.push_back(f.latency_ms());
    s.latency_ms_mean = mean_of(lat);
    s.latency_ms_sd = sd_of(lat);
    if (frames.size() >= 2) {
        const double span = frames.back().display_ms() - frames.front().display_ms();
        s.fps = span > 0.0 ? 1000.0 * static_cast<double>(frames.size() - 1) / span : 0.0;
    } else {
        s.fps = s.latency_ms_mean > 0.0 ? 1000.0 / s.latency_ms_mean : 0.0;
    }
    for (int i = 0; i < kStageCount; ++i) {
        double sum = 0.0;
        for (const auto& f : frames) sum += f.end_ms[i] - f.start_ms[i];
        s.stage_ms_mean[i] = sum / static_cast<double>(frames.size());
    }
    return s;
}

PipelineStats run_pipeline(const PipelineConfig& config, scope::ScopeSession& session, int n_frames,
                           const FrameSink& sink, std::stop_token stop)
{
    if (n_frames < 0) throw Error(ErrorCode::InvalidArgument, "n_frames must be >= 0");
    Runner runner(config, session);
    std::vector<FrameTimings> shown;
    std::uint64_t captured = 0;
    auto more = [&](std::uint64_t k) { return n_frames == 0 || k < static_cast<std::uint64_t>(n_frames); };

    if (config.mode == ExecMode::Sequential) {
        for (std::uint64_t k = 0; more(k) && !stop.stop_requested(); ++k) {
            runner.pace(k);
            FrameResult f;
            for (int s = 0; s < kStageCount; ++s) runner.run(static_cast<Stage>(s), f);
            ++captured;
            shown.push_back(timings_of(f));
            if (sink) sink(std::move(f));
        }
        auto stats = summarize(shown, captured, 0);
        stats.interrupted = stop.stop_requested() && (n_frames == 0 || shown.size() < static_cast<std::size_t>(n_frames));
        return stats;
    }

    std::stop_source halt;
    std::stop_callback forward(stop, [&] { halt.request_stop(); });
    const std::stop_token tok = halt.get_token();
    std::vector<std::unique_ptr<Channel<FrameResult>>> links;
    for (int i = 0; i + 1 < kStageCount; ++i) links.push_back(std::make_unique<Channel<FrameResult>>(config.queue_policy));

    std::mutex error_mutex;
    std::exception_ptr error;
    auto guarded = [&](auto&& body) {
        return [&, body] {
            try {
                body();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                halt.request_stop();
            }
        };
    };

    {
        std::vector<std::jthread> workers;
        workers.emplace_back(guarded([&] {
            for (std::uint64_t k = 0; more(k) && !tok.stop_requested(); ++k) {
                runner.pace(k);
                FrameResult f;
                runner.run(Stage::Capture, f);
                ++captured;
                if (!links[0]->push(std::move(f), tok)) break;
            }
            links[0]->close();
        }));
        for (int s = 1; s + 1 < kStageCount; ++s) {
            workers.emplace_back(guarded([&, s] {
                while (auto f = links[s - 1]->pop(tok)) {
                    runner.run(static_cast<Stage>(s), *f);
                    if (!links[s]->push(std::move(*f), tok)) break;
                }
                links[s]->close();
            }));
        }
        workers.emplace_back(guarded([&] {
            while (auto f = links.back()->pop(tok)) {
                runner.run(Stage::DisplayOut, *f);
                shown.push_back(timings_of(*f));
                if (sink) sink(std::move(*f));
            }
        }));
        for (auto& w : workers) w.join();
    }
    if (error) std::rethrow_exception(error);

    std::uint64_t dropped = 0;
    for (const auto& l : links) dropped += l->dropped();
    auto stats = summarize(shown, captured, dropped);
    stats.interrupted = stop.stop_requested() && (n_frames == 0 || captured < static_cast<std::uint64_t>(n_frames) ||
                                                  shown.size() + dropped < captured);
    return stats;
}

std::vector<BenchConfig> fig2c_matrix(const PipelineConfig& base)
{
    std::vector<BenchConfig> out;
    for (ExecMode m : {ExecMode::Sequential, ExecMode::Pipelined})
        for (InferenceMode i : {InferenceMode::SlidingWindow, InferenceMode::Fcn}) {
            PipelineConfig c = base;
            c.mode = m;
            c.inference_mode = i;
            out.push_back({std::string(to_string(m)) + "+" + to_string(i), c});
        }
    return out;
}

std::vector<BenchRow> bench(const std::vector<BenchConfig>& configs, scope::ScopeSession& session, int repetitions,
                            int frames_per_rep)
{
    if (repetitions < 2) throw Error(ErrorCode::InvalidArgument, "bench needs at least 2 repetitions");
    if (frames_per_rep < 1) throw Error(ErrorCode::InvalidArgument, "bench needs at least 1 frame per repetition");
    std::vector<BenchRow> rows;
    for (const auto& bc : configs) {
        std::vector<double> lat, fps;
        BenchRow row;
        row.config = bc.name;
        row.repetitions = repetitions;
        for (int r = 0; r < repetitions; ++r) {
            const auto stats = run_pipeline(bc.config, session, frames_per_rep);
            lat.push_back(stats.latency_ms_mean);
            fps.push_back(stats.fps);
            row.frames_dropped += stats.frames_dropped;
        }
        row.latency_ms_mean = mean_of(lat);
        row.latency_ms_sd = sd_of(lat);
        row.fps_mean = mean_of(fps);
        row.fps_sd = sd_of(fps);
        rows.push_back(row);
    }
    return rows;
}

std::vector<BenchRow> rank_by_fps(std::vector<BenchRow> rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) { return a.fps_mean > b.fps_mean; });
    return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows)
{
    out << "config,latency_ms_mean,latency_ms_sd,fps_mean,fps_sd,frames_dropped\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.3f,%.3f,%llu\n", r.config.c_str(), r.latency_ms_mean,
                      r.latency_ms_sd, r.fps_mean, r.fps_sd, static_cast<unsigned long long>(r.frames_dropped));
        out << buf;
    }
}

} // namespace arm::pipeline
