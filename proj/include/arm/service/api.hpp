#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "arm/service/session.hpp"

namespace arm::service {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Transport-free HTTP routing:
//   GET    /v1/slides
//   POST   /v1/sessions                   {slide_id, fov_px?, config?}
//   GET    /v1/sessions/{id}
//   POST   /v1/sessions/{id}/stage[?clamp=1] {x_um, y_um, focus_z?}
//   POST   /v1/sessions/{id}/objective    {name}
//   POST   /v1/sessions/{id}/display      {mode, color_space?}
//   GET    /v1/sessions/{id}/stats
//   DELETE /v1/sessions/{id}
ApiResponse handle_request(SessionManager& sessions, std::string_view method, std::string_view target,
                           std::string_view body);

// Session id of a /v1/sessions/{id}/stream target.
std::optional<std::string> stream_session_id(std::string_view target);

} // namespace arm::service
