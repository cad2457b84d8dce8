#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "arm/overlay/render.hpp"
#include "arm/pipeline/pipeline.hpp"

namespace arm::service {

inline constexpr const char* kSchemaVersion = "arm-msg/1";
inline constexpr int kMaxStreamImagePx = 1024;

struct Telemetry {
    std::array<double, pipeline::kStageCount> stage_ms{};
    double latency_ms = 0.0;
    double fps = 0.0;
    std::uint64_t dropped = 0;
};

// Box-filter downscale by the smallest integer factor that brings both sides to <= max_side.
tensor::Tensor downscale_to(const tensor::Tensor& rgb, int max_side);

// Server -> client frame message. The PNG is the processed FOV (with the
// heatmap blended in for heatmap mode) downscaled to <= max_side; overlay
// coordinates stay in FOV pixels, fov_px / image_px gives the scale.
nlohmann::json frame_message(const pipeline::FrameResult& f, const Telemetry& t, double focus_threshold,
                             int max_side = kMaxStreamImagePx);

nlohmann::json ack_message(const std::string& command, bool ok, const nlohmann::json& state,
                           const std::vector<std::string>& notices = {}, const std::string& error = {});

// Checks a server -> client message (frame or ack) against the arm-msg/1
// schema; unknown fields are errors. Empty result means valid.
std::vector<std::string> validate_server_message(const nlohmann::json& j);

struct StageCommand {
    double x_um = 0.0;
    double y_um = 0.0;
    std::optional<double> focus_z;
    bool clamp = false;
};

struct ObjectiveCommand {
    std::string name;
};

struct DisplayCommand {
    overlay::DisplayMode mode = overlay::DisplayMode::Outline;
    std::optional<overlay::ColorSpace> color_space;
};

using ClientCommand = std::variant<StageCommand, ObjectiveCommand, DisplayCommand>;

// HTTP bodies: {x_um, y_um, focus_z?}, {name}, {mode, color_space?}. Unknown
// fields and wrong types throw ParseError.
StageCommand parse_stage_body(const nlohmann::json& j);
ObjectiveCommand parse_objective_body(const nlohmann::json& j);
DisplayCommand parse_display_body(const nlohmann::json& j);

// WS client messages: {schema: "arm-msg/1", type: stage|objective|display, ...body}.
// Stage messages may also carry clamp: bool.
ClientCommand parse_client_message(const nlohmann::json& j);

nlohmann::json to_json(const ClientCommand& c);

} // namespace arm::service
