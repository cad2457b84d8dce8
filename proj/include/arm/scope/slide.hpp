#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "arm/tensor/tensor.hpp"

namespace arm::scope {

struct Annotation {
    std::string label; // benign | tumor
    std::vector<std::array<double, 2>> polygon; // slide pixel coordinates (x, y)
};

struct VirtualSlide {
    std::string id;
    tensor::Tensor image; // RGB in [0,1]
    double base_um_per_px = 0.45;
    std::vector<Annotation> annotations;

    double width_um() const noexcept { return image.width() * base_um_per_px; }
    double height_um() const noexcept { return image.height() * base_um_per_px; }
};

struct SlideInfo {
    std::string id;
    int width = 0;
    int height = 0;
    double base_um_per_px = 0.0;
    std::vector<Annotation> annotations;
};

// slides/<id>.png + slides/<id>.meta (JSON: id, base_um_per_px, width, height, annotations).
void save_slide(const std::filesystem::path& dir, const VirtualSlide& slide);
VirtualSlide load_slide(const std::filesystem::path& dir, const std::string& id);
// Metadata only, sorted by id.
std::vector<SlideInfo> list_slides(const std::filesystem::path& dir);

inline constexpr double kDefaultSensorPitchUm = 4.5;

struct Objective {
    std::string name;
    double magnification = 10.0;
    double um_per_px = kDefaultSensorPitchUm / 10.0;
};

// 4X, 10X, 20X or 40X; throws NotFound for anything else.
Objective make_objective(const std::string& name, double sensor_pitch_um = kDefaultSensorPitchUm);
const std::vector<std::string>& objective_names();

struct StagePose {
    double x_um = 0.0;
    double y_um = 0.0;
    double focus_z = 0.0;

    friend bool operator==(const StagePose&, const StagePose&) = default;
};

// The FOV center has to lie on the slide.
bool pose_in_bounds(const VirtualSlide& slide, const StagePose& pose) noexcept;
StagePose clamp_pose(const VirtualSlide& slide, StagePose pose) noexcept;

} // namespace arm::scope
