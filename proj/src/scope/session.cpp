#include "arm/scope/session.hpp"

#include <algorithm>

#include "arm/common/error.hpp"
#include "arm/net/io.hpp"

namespace arm::scope {

namespace fs = std::filesystem;

void ModelRegistry::add(std::shared_ptr<const infer::CompiledNet> model)
{
    if (!model) throw Error(ErrorCode::InvalidArgument, "null model");
    models_[model->graph().header().objective_tag] = std::move(model);
}

std::shared_ptr<const infer::CompiledNet> ModelRegistry::find(const std::string& tag) const
{
    const auto it = models_.find(tag);
    return it == models_.end() ? nullptr : it->second;
}

std::vector<std::string> ModelRegistry::tags() const
{
    std::vector<std::string> out;
    for (const auto& [tag, _] : models_) out.push_back(tag);
    return out;
}

ModelRegistry ModelRegistry::load_dir(const fs::path& dir)
{
    ModelRegistry reg;
    if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, "no model directory " + dir.string());
    std::vector<fs::path> graphs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json" && fs::exists(net::weights_path_for(entry.path())))
            graphs.push_back(entry.path());
    std::sort(graphs.begin(), graphs.end());
    for (const auto& g : graphs) reg.add(std::make_shared<const infer::CompiledNet>(net::load_graph(g)));
    return reg;
}

ScopeSession::ScopeSession(std::shared_ptr<const VirtualSlide> slide, std::shared_ptr<const ModelRegistry> models,
                           const std::string& objective, double sensor_pitch_um)
    : slide_(std::move(slide)), models_(std::move(models)), sensor_pitch_um_(sensor_pitch_um)
{
    if (!slide_) throw Error(ErrorCode::InvalidArgument, "session needs a slide");
    if (!models_) models_ = std::make_shared<const ModelRegistry>();
    state_.pose = {slide_->width_um() / 2.0, slide_->height_um() / 2.0, 0.0};
    state_.objective = make_objective(objective, sensor_pitch_um_);
    state_.model = models_->find(objective);
}

StagePose ScopeSession::set_pose(StagePose pose, bool clamp)
{
    if (clamp) pose = clamp_pose(*slide_, pose);
    else if (!pose_in_bounds(*slide_, pose)) throw Error(ErrorCode::OutOfBounds, "stage pose is off the slide");
    std::lock_guard lock(mutex_);
    state_.pose = pose;
    return pose;
}

ObjectiveChange ScopeSession::set_objective(const std::string& name)
{
    const Objective o = make_objective(name, sensor_pitch_um_);
    auto model = models_->find(name);
    std::lock_guard lock(mutex_);
    state_.objective = o;
    state_.model = std::move(model);
    return {o, state_.model != nullptr};
}

ScopeState ScopeSession::state() const
{
    std::lock_guard lock(mutex_);
    return state_;
}

FOVFrame ScopeSession::capture(int fov_px)
{
    FOVFrame f;
    {
        std::lock_guard lock(mutex_);
        f.seq = next_seq_++;
        f.pose = state_.pose;
        f.objective = state_.objective;
        f.model = state_.model;
    }
    f.slide_id = slide_->id;
    f.raw = capture_fov(*slide_, f.pose, f.objective, fov_px);
    return f;
}

} // namespace arm::scope
