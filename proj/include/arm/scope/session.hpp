#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "arm/infer/executor.hpp"
#include "arm/scope/capture.hpp"
#include "arm/scope/slide.hpp"

namespace arm::scope {

inline constexpr int kStageCount = 6;

// One captured field of view travelling down the pipeline.
struct FOVFrame {
    std::uint64_t seq = 0;
    std::string slide_id;
    Mosaic raw;
    tensor::Tensor rgb; // empty until debayered
    StagePose pose;
    Objective objective;
    std::shared_ptr<const infer::CompiledNet> model; // null: no model for this objective
    std::array<double, kStageCount> stage_start_ms{};
    std::array<double, kStageCount> stage_end_ms{};
    double focus_score = 0.0;
};

// Models keyed by objective tag. Immutable once shared.
class ModelRegistry {
public:
    void add(std::shared_ptr<const infer::CompiledNet> model);
    std::shared_ptr<const infer::CompiledNet> find(const std::string& tag) const;
    std::vector<std::string> tags() const;
    bool empty() const noexcept { return models_.empty(); }

    // Every <name>.json graph with a sibling .armw in `dir`.
    static ModelRegistry load_dir(const std::filesystem::path& dir);

private:
    std::map<std::string, std::shared_ptr<const infer::CompiledNet>> models_;
};

struct ScopeState {
    StagePose pose;
    Objective objective;
    std::shared_ptr<const infer::CompiledNet> model;
};

struct ObjectiveChange {
    Objective objective;
    bool has_model = false;
};

// Stage pose, objective and active model for one slide. Mutations and
// captures are serialized; a capture sees one consistent snapshot.
class ScopeSession {
public:
    ScopeSession(std::shared_ptr<const VirtualSlide> slide, std::shared_ptr<const ModelRegistry> models,
                 const std::string& objective = "10X", double sensor_pitch_um = kDefaultSensorPitchUm);

    // Throws OutOfBounds unless clamp is set.
    StagePose set_pose(StagePose pose, bool clamp = false);
    // Throws NotFound for an unknown objective name.
    ObjectiveChange set_objective(const std::string& name);

    ScopeState state() const;
    const VirtualSlide& slide() const noexcept { return *slide_; }
    std::shared_ptr<const VirtualSlide> slide_ptr() const noexcept { return slide_; }

    FOVFrame capture(int fov_px);

private:
    std::shared_ptr<const VirtualSlide> slide_;
    std::shared_ptr<const ModelRegistry> models_;
    double sensor_pitch_um_;
    mutable std::mutex mutex_;
    ScopeState state_;
    std::uint64_t next_seq_ = 0;
};

} // namespace arm::scope
