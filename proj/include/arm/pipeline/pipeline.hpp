#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "arm/infer/heatmap.hpp"
#include "arm/overlay/render.hpp"
#include "arm/pipeline/channel.hpp"
#include "arm/scope/session.hpp"

namespace arm::pipeline {

enum class Stage { Capture, Debayer, Preprocess, Inference, Postprocess, DisplayOut };
inline constexpr int kStageCount = scope::kStageCount;
const char* to_string(Stage s);

enum class ExecMode { Sequential, Pipelined };
enum class InferenceMode { SlidingWindow, Fcn };

const char* to_string(ExecMode m);
const char* to_string(InferenceMode m);
const char* to_string(QueuePolicy q);

struct PipelineConfig {
    ExecMode mode = ExecMode::Pipelined;
    InferenceMode inference_mode = InferenceMode::Fcn;
    QueuePolicy queue_policy = QueuePolicy::Lossless;
    int fov_px = 512;
    // Minimum duration per stage in Stage order; missing entries are 0.
    std::vector<double> synthetic_stage_delays_ms;
    bool real_work = true;          // false: stages only sleep their synthetic delay
    double capture_interval_ms = 0; // camera frame period; 0 = capture as fast as the pipe allows
    double focus_threshold = 0.5;
    std::array<float, 3> wb_gains{1.0f, 1.0f, 1.0f};
    overlay::OverlayOptions overlay;
    // Live display settings read once per frame in postprocess; empty: `overlay`.
    std::function<overlay::OverlayOptions()> overlay_source;
    scope::FocusScorer focus; // empty: variance-of-Laplacian score
    int inference_threads = 1;
};

struct FocusGate {
    bool overlay_allowed = true;
    std::string notice; // "out of focus" when suppressed
};

// score >= threshold passes.
FocusGate focus_gate(double score, double threshold);

inline constexpr const char* kNoModelNotice = "no-model";
inline constexpr const char* kOutOfFocusNotice = "out of focus";

struct FrameResult {
    scope::FOVFrame frame;
    infer::Heatmap heatmap; // empty when there was no model
    overlay::OverlayGraphic overlay;
    std::string overlay_json; // produced by the display-out stage
    FocusGate gate;
    bool has_model = false;
    std::vector<std::string> notices;

    double latency_ms() const noexcept
    {
        return frame.stage_end_ms[kStageCount - 1] - frame.stage_start_ms[0];
    }
};

struct FrameTimings {
    std::uint64_t seq = 0;
    std::array<double, kStageCount> start_ms{};
    std::array<double, kStageCount> end_ms{};

    double latency_ms() const noexcept { return end_ms[kStageCount - 1] - start_ms[0]; }
    double display_ms() const noexcept { return end_ms[kStageCount - 1]; }
};

struct PipelineStats {
    std::vector<FrameTimings> frames; // in display order
    std::uint64_t frames_captured = 0;
    std::uint64_t frames_dropped = 0;
    double latency_ms_mean = 0.0;
    double latency_ms_sd = 0.0;
    double fps = 0.0; // (n - 1) / (last display - first display)
    std::array<double, kStageCount> stage_ms_mean{};
    bool interrupted = false;
};

PipelineStats summarize(std::span<const FrameTimings> frames, std::uint64_t captured, std::uint64_t dropped);

using FrameSink = std::function<void(FrameResult&&)>;

// Runs n_frames captures (0 = until stopped) from the session's current pose.
// The sink sees frames in display order, on the display-out worker.
PipelineStats run_pipeline(const PipelineConfig& config, scope::ScopeSession& session, int n_frames,
                           const FrameSink& sink = {}, std::stop_token stop = {});

struct BenchConfig {
    std::string name;
    PipelineConfig config;
};

struct BenchRow {
    std::string config;
    double latency_ms_mean = 0.0;
    double latency_ms_sd = 0.0;
    double fps_mean = 0.0;
    double fps_sd = 0.0;
    std::uint64_t frames_dropped = 0;
    int repetitions = 0;
};

// sequential/pipelined x sliding/fcn on top of `base`.
std::vector<BenchConfig> fig2c_matrix(const PipelineConfig& base);

// Each repetition runs frames_per_rep frames from the same pose; latency and
// fps are per-repetition means, then mean and sample sd over repetitions.
std::vector<BenchRow> bench(const std::vector<BenchConfig>& configs, scope::ScopeSession& session, int repetitions,
                            int frames_per_rep);

// Highest fps first.
std::vector<BenchRow> rank_by_fps(std::vector<BenchRow> rows);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

} // namespace arm::pipeline
