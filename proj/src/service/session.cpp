#include "arm/service/session.hpp"

#include <algorithm>

#include "arm/common/error.hpp"

namespace arm::service {

using nlohmann::json;

namespace {

constexpr std::size_t kStatsWindow = 120;

json pose_json(const scope::StagePose& p)
{
    return {{"x_um", p.x_um}, {"y_um", p.y_um}, {"focus_z", p.focus_z}};
}

} // namespace

Session::Session(std::string id, std::shared_ptr<const scope::VirtualSlide> slide,
                 std::shared_ptr<const scope::ModelRegistry> models, pipeline::PipelineConfig config,
                 const std::string& objective)
    : id_(std::move(id)), slide_id_(slide->id), config_(std::move(config)),
      scope_(std::make_unique<scope::ScopeSession>(std::move(slide), std::move(models), objective)),
      display_mode_(config_.overlay.mode), color_space_(config_.overlay.color_space)
{
    if (!scope_->state().model) display_mode_ = overlay::DisplayMode::Off;
    config_.overlay_source = [this] {
        std::lock_guard lock(mutex_);
        auto o = config_.overlay;
        o.mode = display_mode_;
        o.color_space = color_space_;
        return o;
    };
}

Session::~Session() { detach(); }

json Session::state_locked() const
{
    const auto s = scope_->state();
    return {{"session_id", id_},
            {"slide_id", slide_id_},
            {"stage", pose_json(s.pose)},
            {"objective", s.objective.name},
            {"has_model", s.model != nullptr},
            {"display", {{"mode", overlay::to_string(display_mode_)}, {"color_space", overlay::to_string(color_space_)}}}};
}

json Session::state() const
{
    std::lock_guard lock(mutex_);
    return state_locked();
}

MutationResult Session::apply(const ClientCommand& command)
{
    std::lock_guard lock(mutex_);
    MutationResult r;
    if (const auto* s = std::get_if<StageCommand>(&command)) {
        auto pose = scope_->state().pose;
        pose.x_um = s->x_um;
        pose.y_um = s->y_um;
        if (s->focus_z) pose.focus_z = *s->focus_z;
        try {
            scope_->set_pose(pose, s->clamp);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OutOfBounds) throw;
            r.status = 422;
            r.error = e.what();
        }
    } else if (const auto* o = std::get_if<ObjectiveCommand>(&command)) {
        try {
            if (!scope_->set_objective(o->name).has_model) {
                r.notices.push_back(pipeline::kNoModelNotice);
                if (display_mode_ != overlay::DisplayMode::Off) {
                    display_mode_ = overlay::DisplayMode::Off;
                    r.status = 409;
                    r.error = "no model for objective " + o->name + "; overlay turned off";
                }
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotFound) throw;
            r.status = 404;
            r.error = e.what();
        }
    } else {
        const auto& d = std::get<DisplayCommand>(command);
        if (d.color_space) color_space_ = *d.color_space;
        if (d.mode != overlay::DisplayMode::Off && !scope_->state().model) {
            display_mode_ = overlay::DisplayMode::Off;
            r.notices.push_back(pipeline::kNoModelNotice);
            r.status = 409;
            r.error = "no model for the current objective; overlay stays off";
        } else {
            display_mode_ = d.mode;
        }
    }
    r.state = state_locked();
    return r;
}

void Session::handle_frame(pipeline::FrameResult&& f)
{
    Telemetry t;
    {
        std::lock_guard lock(mutex_);
        if (last_seq_ && f.frame.seq > *last_seq_ + 1) dropped_ += f.frame.seq - *last_seq_ - 1;
        last_seq_ = f.frame.seq;
        pipeline::FrameTimings timing{f.frame.seq, f.frame.stage_start_ms, f.frame.stage_end_ms};
        recent_.push_back(timing);
        if (recent_.size() > kStatsWindow) recent_.pop_front();
        ++frames_total_;
        const std::vector<pipeline::FrameTimings> window(recent_.begin(), recent_.end());
        const auto s = pipeline::summarize(window, 0, 0);
        for (int k = 0; k < pipeline::kStageCount; ++k) t.stage_ms[k] = timing.end_ms[k] - timing.start_ms[k];
        t.latency_ms = timing.latency_ms();
        t.fps = s.fps;
        t.dropped = dropped_;
    }
    if (frame_cb_) frame_cb_(frame_message(f, t, config_.focus_threshold).dump());
}

bool Session::attach(FrameCallback frame_cb, CloseCallback close_cb)
{
    std::lock_guard lock(stream_mutex_);
    if (worker_.joinable()) return false;
    frame_cb_ = std::move(frame_cb);
    close_cb_ = std::move(close_cb);
    {
        std::lock_guard l(mutex_);
        last_seq_.reset();
        recent_.clear();
    }
    streaming_ = true;
    worker_ = std::jthread([this](std::stop_token stop) {
        try {
            pipeline::run_pipeline(config_, *scope_, 0, [this](pipeline::FrameResult&& f) { handle_frame(std::move(f)); },
                                   stop);
        } catch (...) {
            // A failing pipeline ends the stream; the transport sees the close.
        }
        // close_cb_ stays valid until detach() has joined this thread.
        if (!stop.stop_requested() && close_cb_) close_cb_();
    });
    return true;
}

void Session::detach()
{
    std::lock_guard lock(stream_mutex_);
    if (!worker_.joinable()) return;
    worker_.request_stop();
    if (close_cb_) close_cb_();
    worker_.join();
    worker_ = {};
    streaming_ = false;
    frame_cb_ = {};
    close_cb_ = {};
}

bool Session::streaming() const
{
    return streaming_;
}

void Session::add_dropped(std::uint64_t n)
{
    std::lock_guard lock(mutex_);
    dropped_ += n;
}

json Session::stats() const
{
    std::lock_guard lock(mutex_);
    const std::vector<pipeline::FrameTimings> window(recent_.begin(), recent_.end());
    const auto s = pipeline::summarize(window, frames_total_ + dropped_, dropped_);
    json stage = json::object();
    for (int k = 0; k < pipeline::kStageCount; ++k)
        stage[pipeline::to_string(static_cast<pipeline::Stage>(k))] = s.stage_ms_mean[k];
    return {{"session_id", id_},
            {"streaming", streaming_.load()},
            {"config",
             {{"mode", pipeline::to_string(config_.mode)},
              {"inference_mode", pipeline::to_string(config_.inference_mode)},
              {"queue_policy", pipeline::to_string(config_.queue_policy)},
              {"fov_px", config_.fov_px}}},
            {"window_frames", window.size()},
            {"frames_displayed", frames_total_},
            {"frames_dropped", dropped_},
            {"latency_ms_mean", s.latency_ms_mean},
            {"latency_ms_sd", s.latency_ms_sd},
            {"fps", s.fps},
            {"stage_ms_mean", stage}};
}

pipeline::PipelineConfig apply_config_json(pipeline::PipelineConfig c, const json& j, std::string* objective)
{
    if (j.is_null()) return c;
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be an object");
    auto str = [&](const std::string& k) {
        if (!j.at(k).is_string()) throw Error(ErrorCode::ParseError, "config." + k + " must be a string");
        return j.at(k).get<std::string>();
    };
    auto num = [&](const std::string& k) {
        if (!j.at(k).is_number()) throw Error(ErrorCode::ParseError, "config." + k + " must be a number");
        return j.at(k).get<double>();
    };
    for (const auto& [k, v] : j.items()) {
        if (k == "mode") {
            const auto s = str(k);
            if (s != "sequential" && s != "pipelined") throw Error(ErrorCode::ParseError, "config.mode: " + s);
            c.mode = s == "sequential" ? pipeline::ExecMode::Sequential : pipeline::ExecMode::Pipelined;
        } else if (k == "inference_mode") {
            const auto s = str(k);
            if (s != "sliding" && s != "fcn") throw Error(ErrorCode::ParseError, "config.inference_mode: " + s);
            c.inference_mode = s == "fcn" ? pipeline::InferenceMode::Fcn : pipeline::InferenceMode::SlidingWindow;
        } else if (k == "queue_policy") {
            const auto s = str(k);
            if (s != "lossless" && s != "latest_wins") throw Error(ErrorCode::ParseError, "config.queue_policy: " + s);
            c.queue_policy = s == "lossless" ? pipeline::QueuePolicy::Lossless : pipeline::QueuePolicy::LatestWins;
        } else if (k == "fov_px") {
            const double v = num(k);
            if (v < 2 || v > 8192 || static_cast<int>(v) != v || static_cast<int>(v) % 2 != 0)
                throw Error(ErrorCode::ParseError, "config.fov_px must be an even integer in [2, 8192]");
            c.fov_px = static_cast<int>(v);
        } else if (k == "capture_interval_ms") {
            c.capture_interval_ms = std::max(0.0, num(k));
        } else if (k == "focus_threshold") {
            c.focus_threshold = num(k);
        } else if (k == "synthetic_stage_delays_ms") {
            if (!v.is_array()) throw Error(ErrorCode::ParseError, "config.synthetic_stage_delays_ms must be an array");
            c.synthetic_stage_delays_ms.clear();
            for (const auto& d : v) {
                if (!d.is_number()) throw Error(ErrorCode::ParseError, "stage delays must be numbers");
                c.synthetic_stage_delays_ms.push_back(std::max(0.0, d.get<double>()));
            }
        } else if (k == "objective" && objective) {
            *objective = str(k);
        } else {
            throw Error(ErrorCode::ParseError, "unknown config field '" + k + "'");
        }
    }
    return c;
}

SessionManager::SessionManager(std::filesystem::path slides_dir, std::shared_ptr<const scope::ModelRegistry> models,
                               pipeline::PipelineConfig base)
    : slides_dir_(std::move(slides_dir)), models_(std::move(models)), base_(std::move(base))
{
}

std::shared_ptr<const scope::VirtualSlide> SessionManager::slide(const std::string& id)
{
    std::lock_guard lock(mutex_);
    if (const auto it = slides_.find(id); it != slides_.end()) return it->second;
    auto s = std::make_shared<const scope::VirtualSlide>(scope::load_slide(slides_dir_, id));
    slides_[id] = s;
    return s;
}

std::shared_ptr<Session> SessionManager::create(const SessionRequest& request)
{
    std::string objective = "10X";
    auto config = apply_config_json(base_, request.config, &objective);
    if (request.fov_px) config = apply_config_json(config, json{{"fov_px", *request.fov_px}});
    auto sl = slide(request.slide_id);
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_id_++);
    }
    auto session = std::make_shared<Session>(id, std::move(sl), models_, std::move(config), objective);
    std::lock_guard lock(mutex_);
    sessions_[id] = session;
    return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const
{
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

bool SessionManager::remove(const std::string& id)
{
    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) return false;
        s = std::move(it->second);
        sessions_.erase(it);
    }
    s->detach();
    return true;
}

std::vector<std::string> SessionManager::ids() const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [k, _] : sessions_) out.push_back(k);
    return out;
}

json SessionManager::slides() const
{
    json out = json::array();
    for (const auto& info : scope::list_slides(slides_dir_))
        out.push_back({{"id", info.id},
                       {"width", info.width},
                       {"height", info.height},
                       {"base_um_per_px", info.base_um_per_px},
                       {"width_um", info.width * info.base_um_per_px},
                       {"height_um", info.height * info.base_um_per_px},
                       {"annotations", info.annotations.size()}});
    return json{{"slides", out}, {"objectives", scope::objective_names()}, {"models", models_->tags()}};
}

} // namespace arm::service
