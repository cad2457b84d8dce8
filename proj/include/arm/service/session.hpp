#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "arm/pipeline/pipeline.hpp"
#include "arm/scope/session.hpp"
#include "arm/service/protocol.hpp"

namespace arm::service {

struct MutationResult {
    int status = 200; // 200, 404 unknown objective, 409 no-model conflict, 422 off-slide
    nlohmann::json state;
    std::vector<std::string> notices;
    std::string error;
};

// One viewer session: a scope on one slide, live display settings and at most
// one attached stream, which owns the session's pipeline thread.
class Session {
public:
    using FrameCallback = std::function<void(std::string message)>;
    using CloseCallback = std::function<void()>;

    Session(std::string id, std::shared_ptr<const scope::VirtualSlide> slide,
            std::shared_ptr<const scope::ModelRegistry> models, pipeline::PipelineConfig config,
            const std::string& objective = "10X");
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const noexcept { return id_; }
    const std::string& slide_id() const noexcept { return slide_id_; }
    const pipeline::PipelineConfig& config() const noexcept { return config_; }

    MutationResult apply(const ClientCommand& command);
    nlohmann::json state() const;
    nlohmann::json stats() const;

    // Starts the pipeline; frame messages go to `on_frame` on the pipeline's
    // display-out worker. `on_close` runs when the stream is detached.
    // False when a stream is already attached.
    bool attach(FrameCallback on_frame, CloseCallback on_close = {});
    void detach();
    bool streaming() const;

    // Frames the transport discarded after they left the pipeline.
    void add_dropped(std::uint64_t n);

private:
    void handle_frame(pipeline::FrameResult&& f);
    nlohmann::json state_locked() const;

    std::string id_;
    std::string slide_id_;
    pipeline::PipelineConfig config_;
    std::unique_ptr<scope::ScopeSession> scope_;

    mutable std::mutex mutex_;
    overlay::DisplayMode display_mode_;
    overlay::ColorSpace color_space_;
    std::deque<pipeline::FrameTimings> recent_;
    std::uint64_t frames_total_ = 0;
    std::uint64_t dropped_ = 0;
    std::optional<std::uint64_t> last_seq_;

    std::mutex stream_mutex_; // serializes attach/detach
    FrameCallback frame_cb_;
    CloseCallback close_cb_;
    std::atomic<bool> streaming_ = false;
    std::jthread worker_;
};

struct SessionRequest {
    std::string slide_id;
    std::optional<int> fov_px;
    nlohmann::json config = nlohmann::json::object();
};

// Slide store, model registry and the live sessions.
class SessionManager {
public:
    SessionManager(std::filesystem::path slides_dir, std::shared_ptr<const scope::ModelRegistry> models,
                   pipeline::PipelineConfig base);

    // Throws NotFound for an unknown slide, ParseError for a bad config block.
    std::shared_ptr<Session> create(const SessionRequest& request);
    std::shared_ptr<Session> find(const std::string& id) const;
    bool remove(const std::string& id);
    std::vector<std::string> ids() const;
    nlohmann::json slides() const;

private:
    std::shared_ptr<const scope::VirtualSlide> slide(const std::string& id);

    std::filesystem::path slides_dir_;
    std::shared_ptr<const scope::ModelRegistry> models_;
    pipeline::PipelineConfig base_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::shared_ptr<const scope::VirtualSlide>> slides_;
    std::uint64_t next_id_ = 1;
};

// Overrides `base` with {mode, inference_mode, queue_policy, fov_px,
// capture_interval_ms, focus_threshold, synthetic_stage_delays_ms, objective};
// unknown keys throw ParseError.
pipeline::PipelineConfig apply_config_json(pipeline::PipelineConfig base, const nlohmann::json& j,
                                           std::string* objective = nullptr);

} // namespace arm::service
