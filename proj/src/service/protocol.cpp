#include "arm/service/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>

#include "arm/common/error.hpp"
#include "arm/common/png_io.hpp"

namespace arm::service {

using nlohmann::json;

namespace {

const char* const kStageKeys[pipeline::kStageCount] = {"capture",   "debayer",     "preprocess",
                                                       "inference", "postprocess", "display_out"};

json stage_json(const scope::StagePose& p)
{
    return {{"x_um", p.x_um}, {"y_um", p.y_um}, {"focus_z", p.focus_z}};
}

// Collects schema violations with a JSON-pointer-like path.
class Checker {
public:
    std::vector<std::string> errors;

    bool object(const json& j, const std::string& path, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional = {})
    {
        if (!j.is_object()) return fail(path, "expected object");
        std::set<std::string> allowed;
        for (const char* k : required) {
            allowed.insert(k);
            if (!j.contains(k)) fail(path + "/" + k, "missing");
        }
        for (const char* k : optional) allowed.insert(k);
        for (const auto& [k, _] : j.items())
            if (!allowed.count(k)) fail(path + "/" + k, "unknown field");
        return true;
    }

    bool number(const json& j, const std::string& path)
    {
        if (!j.is_number()) return fail(path, "expected number");
        if (!std::isfinite(j.get<double>())) return fail(path, "not finite");
        return true;
    }
    bool uint(const json& j, const std::string& path)
    {
        return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)
                   ? true
                   : fail(path, "expected non-negative integer");
    }
    bool string(const json& j, const std::string& path) { return j.is_string() ? true : fail(path, "expected string"); }
    bool boolean(const json& j, const std::string& path) { return j.is_boolean() ? true : fail(path, "expected boolean"); }
    bool oneof(const json& j, const std::string& path, std::initializer_list<const char*> values)
    {
        if (!string(j, path)) return false;
        const auto s = j.get<std::string>();
        for (const char* v : values)
            if (s == v) return true;
        return fail(path, "unexpected value '" + s + "'");
    }
    bool color(const json& j, const std::string& path)
    {
        if (!j.is_array() || j.size() != 3) return fail(path, "expected [r, g, b]");
        for (const auto& v : j)
            if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 255) return fail(path, "channel outside 0..255");
        return true;
    }

    // Field access that is safe after a failed `object` check.
    static const json& at(const json& j, const char* k)
    {
        static const json null;
        return j.is_object() && j.contains(k) ? j.at(k) : null;
    }

    bool fail(const std::string& path, const std::string& what)
    {
        errors.push_back((path.empty() ? "/" : path) + ": " + what);
        return false;
    }
};

void check_stage(Checker& c, const json& j, const std::string& path)
{
    c.object(j, path, {"x_um", "y_um", "focus_z"});
    for (const char* k : {"x_um", "y_um", "focus_z"})
        if (j.is_object() && j.contains(k)) c.number(j.at(k), path + "/" + k);
}

void check_overlay(Checker& c, const json& j, const std::string& path)
{
    using C = Checker;
    c.object(j, path, {"mode", "color_space", "polygons", "texts"});
    if (j.contains("mode")) c.oneof(j.at("mode"), path + "/mode", {"outline", "heatmap", "off"});
    if (j.contains("color_space")) c.oneof(j.at("color_space"), path + "/color_space", {"rgb", "green_only"});
    const auto& polys = C::at(j, "polygons");
    if (!polys.is_array()) {
        if (!polys.is_null()) c.fail(path + "/polygons", "expected array");
    } else {
        for (std::size_t i = 0; i < polys.size(); ++i) {
            const auto p = path + "/polygons/" + std::to_string(i);
            const auto& poly = polys[i];
            c.object(poly, p, {"tag", "color", "hole", "points"});
            if (!poly.is_object()) continue;
            if (poly.contains("tag")) c.string(poly["tag"], p + "/tag");
            if (poly.contains("color")) c.color(poly["color"], p + "/color");
            if (poly.contains("hole")) c.boolean(poly["hole"], p + "/hole");
            const auto& pts = C::at(poly, "points");
            if (!pts.is_array() || pts.size() % 2 != 0 || pts.size() < 6) {
                c.fail(p + "/points", "expected a flat array of at least 3 x,y pairs");
                continue;
            }
            for (std::size_t k = 0; k < pts.size(); ++k) c.number(pts[k], p + "/points/" + std::to_string(k));
        }
    }
    const auto& texts = C::at(j, "texts");
    if (texts.is_array()) {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const auto p = path + "/texts/" + std::to_string(i);
            const auto& t = texts[i];
            c.object(t, p, {"text", "x", "y", "color"});
            if (!t.is_object()) continue;
            if (t.contains("text")) c.string(t["text"], p + "/text");
            if (t.contains("x")) c.number(t["x"], p + "/x");
            if (t.contains("y")) c.number(t["y"], p + "/y");
            if (t.contains("color")) c.color(t["color"], p + "/color");
        }
    } else if (!texts.is_null()) {
        c.fail(path + "/texts", "expected array");
    }
}

void check_frame(Checker& c, const json& j)
{
    using C = Checker;
    c.object(j, "", {"schema", "type", "seq", "slide_id", "fov_png_b64", "fov_px", "image_px", "overlay", "telemetry",
                     "focus", "objective", "stage", "notices"});
    if (j.contains("seq")) c.uint(j["seq"], "/seq");
    if (j.contains("slide_id")) c.string(j["slide_id"], "/slide_id");
    if (j.contains("fov_png_b64")) c.string(j["fov_png_b64"], "/fov_png_b64");
    if (j.contains("fov_px")) c.uint(j["fov_px"], "/fov_px");
    if (j.contains("image_px") && c.uint(j["image_px"], "/image_px") && j["image_px"].get<int>() > kMaxStreamImagePx)
        c.fail("/image_px", "exceeds 1024");
    if (j.contains("objective")) c.string(j["objective"], "/objective");
    if (j.contains("overlay")) check_overlay(c, j["overlay"], "/overlay");
    if (j.contains("stage")) check_stage(c, j["stage"], "/stage");

    const auto& t = C::at(j, "telemetry");
    if (!t.is_null()) {
        c.object(t, "/telemetry", {"stage_ms", "latency_ms", "fps", "dropped"});
        const auto& sm = C::at(t, "stage_ms");
        if (!sm.is_null()) {
            c.object(sm, "/telemetry/stage_ms",
                     {kStageKeys[0], kStageKeys[1], kStageKeys[2], kStageKeys[3], kStageKeys[4], kStageKeys[5]});
            for (const char* k : kStageKeys)
                if (sm.is_object() && sm.contains(k)) c.number(sm[k], std::string("/telemetry/stage_ms/") + k);
        }
        if (t.is_object() && t.contains("latency_ms")) c.number(t["latency_ms"], "/telemetry/latency_ms");
        if (t.is_object() && t.contains("fps")) c.number(t["fps"], "/telemetry/fps");
        if (t.is_object() && t.contains("dropped")) c.uint(t["dropped"], "/telemetry/dropped");
    }
    const auto& f = C::at(j, "focus");
    if (!f.is_null()) {
        c.object(f, "/focus", {"score", "gated", "threshold"});
        if (f.is_object() && f.contains("score")) c.number(f["score"], "/focus/score");
        if (f.is_object() && f.contains("gated")) c.boolean(f["gated"], "/focus/gated");
        if (f.is_object() && f.contains("threshold")) c.number(f["threshold"], "/focus/threshold");
    }
    const auto& n = C::at(j, "notices");
    if (!n.is_null()) {
        if (!n.is_array()) c.fail("/notices", "expected array");
        else
            for (std::size_t i = 0; i < n.size(); ++i) c.string(n[i], "/notices/" + std::to_string(i));
    }
}

void check_ack(Checker& c, const json& j)
{
    using C = Checker;
    c.object(j, "", {"schema", "type", "command", "ok", "state", "notices"}, {"error"});
    if (j.contains("command")) c.oneof(j["command"], "/command", {"attach", "stage", "objective", "display", "invalid"});
    if (j.contains("ok")) c.boolean(j["ok"], "/ok");
    if (j.contains("error")) c.string(j["error"], "/error");
    const auto& n = C::at(j, "notices");
    if (n.is_array())
        for (std::size_t i = 0; i < n.size(); ++i) c.string(n[i], "/notices/" + std::to_string(i));
    else if (!n.is_null())
        c.fail("/notices", "expected array");
    const auto& s = C::at(j, "state");
    if (s.is_null()) return;
    c.object(s, "/state", {"session_id", "slide_id", "stage", "objective", "has_model", "display"});
    if (!s.is_object()) return;
    if (s.contains("session_id")) c.string(s["session_id"], "/state/session_id");
    if (s.contains("slide_id")) c.string(s["slide_id"], "/state/slide_id");
    if (s.contains("objective")) c.string(s["objective"], "/state/objective");
    if (s.contains("has_model")) c.boolean(s["has_model"], "/state/has_model");
    if (s.contains("stage")) check_stage(c, s["stage"], "/state/stage");
    const auto& d = C::at(s, "display");
    if (!d.is_null()) {
        c.object(d, "/state/display", {"mode", "color_space"});
        if (d.is_object() && d.contains("mode")) c.oneof(d["mode"], "/state/display/mode", {"outline", "heatmap", "off"});
        if (d.is_object() && d.contains("color_space"))
            c.oneof(d["color_space"], "/state/display/color_space", {"rgb", "green_only"});
    }
}

// Rejects keys outside `allowed`.
void only_keys(const json& j, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "body must be a JSON object");
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw Error(ErrorCode::ParseError, "unknown field '" + k + "'");
    }
}

double req_number(const json& j, const char* key)
{
    if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a finite number");
    return v.get<double>();
}

std::string req_string(const json& j, const char* key)
{
    if (!j.contains(key) || !j.at(key).is_string())
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

StageCommand stage_from(const json& j)
{
    StageCommand c;
    c.x_um = req_number(j, "x_um");
    c.y_um = req_number(j, "y_um");
    if (j.contains("focus_z")) c.focus_z = req_number(j, "focus_z");
    if (j.contains("clamp")) {
        if (!j.at("clamp").is_boolean()) throw Error(ErrorCode::ParseError, "field 'clamp' must be a boolean");
        c.clamp = j.at("clamp").get<bool>();
    }
    return c;
}

DisplayCommand display_from(const json& j)
{
    DisplayCommand c;
    const auto mode = overlay::parse_display_mode(req_string(j, "mode"));
    if (!mode) throw Error(ErrorCode::ParseError, "mode must be outline, heatmap or off");
    c.mode = *mode;
    if (j.contains("color_space")) {
        const auto cs = overlay::parse_color_space(req_string(j, "color_space"));
        if (!cs) throw Error(ErrorCode::ParseError, "color_space must be rgb or green_only");
        c.color_space = *cs;
    }
    return c;
}

} // namespace

tensor::Tensor downscale_to(const tensor::Tensor& rgb, int max_side)
{
    const int side = std::max(rgb.height(), rgb.width());
    if (side <= max_side) return rgb;
    const int k = (side + max_side - 1) / max_side;
    const int H = rgb.height() / k;
    const int W = rgb.width() / k;
    const int C = rgb.channels();
    tensor::Tensor out(H, W, C);
    const double norm = 1.0 / (k * k);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double s = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) s += rgb.at(y * k + dy, x * k + dx, c);
                out.at(y, x, c) = static_cast<float>(s * norm);
            }
    return out;
}

json frame_message(const pipeline::FrameResult& f, const Telemetry& t, double focus_threshold, int max_side)
{
    const bool heat = f.overlay.mode == overlay::DisplayMode::Heatmap && !f.heatmap.empty();
    const tensor::Tensor shown = heat ? overlay::compose_display(f.frame.rgb, f.overlay, &f.heatmap) : f.frame.rgb;
    const tensor::Tensor small = downscale_to(shown, max_side);

    json stage_ms = json::object();
    for (int k = 0; k < pipeline::kStageCount; ++k) stage_ms[kStageKeys[k]] = t.stage_ms[k];

    json j;
    j["schema"] = kSchemaVersion;
    j["type"] = "frame";
    j["seq"] = f.frame.seq;
    j["slide_id"] = f.frame.slide_id;
    j["fov_png_b64"] = base64_encode(encode_png_rgb8(small));
    j["fov_px"] = f.frame.rgb.width();
    j["image_px"] = small.width();
    j["overlay"] = overlay::to_json(f.overlay);
    j["telemetry"] = {{"stage_ms", stage_ms}, {"latency_ms", t.latency_ms}, {"fps", t.fps}, {"dropped", t.dropped}};
    j["focus"] = {{"score", f.frame.focus_score}, {"gated", !f.gate.overlay_allowed}, {"threshold", focus_threshold}};
    j["objective"] = f.frame.objective.name;
    j["stage"] = stage_json(f.frame.pose);
    j["notices"] = f.notices;
    return j;
}

json ack_message(const std::string& command, bool ok, const json& state, const std::vector<std::string>& notices,
                 const std::string& error)
{
    json j{{"schema", kSchemaVersion}, {"type", "ack"}, {"command", command}, {"ok", ok}, {"state", state},
           {"notices", notices}};
    if (!error.empty()) j["error"] = error;
    return j;
}

std::vector<std::string> validate_server_message(const json& j)
{
    Checker c;
    if (!j.is_object()) return {"/: expected object"};
    if (!j.contains("schema") || j["schema"] != kSchemaVersion) c.errors.push_back("/schema: expected \"arm-msg/1\"");
    const auto type = j.contains("type") && j["type"].is_string() ? j["type"].get<std::string>() : std::string{};
    if (type == "frame") check_frame(c, j);
    else if (type == "ack") check_ack(c, j);
    else c.errors.push_back("/type: expected frame or ack");
    return c.errors;
}

StageCommand parse_stage_body(const json& j)
{
    only_keys(j, {"x_um", "y_um", "focus_z"});
    return stage_from(j);
}

ObjectiveCommand parse_objective_body(const json& j)
{
    only_keys(j, {"name"});
    return {req_string(j, "name")};
}

DisplayCommand parse_display_body(const json& j)
{
    only_keys(j, {"mode", "color_space"});
    return display_from(j);
}

ClientCommand parse_client_message(const json& j)
{
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "message must be a JSON object");
    if (!j.contains("schema") || j["schema"] != kSchemaVersion)
        throw Error(ErrorCode::ParseError, "schema must be \"arm-msg/1\"");
    const auto type = req_string(j, "type");
    if (type == "stage") {
        only_keys(j, {"schema", "type", "x_um", "y_um", "focus_z", "clamp"});
        return stage_from(j);
    }
    if (type == "objective") {
        only_keys(j, {"schema", "type", "name"});
        return ObjectiveCommand{req_string(j, "name")};
    }
    if (type == "display") {
        only_keys(j, {"schema", "type", "mode", "color_space"});
        return display_from(j);
    }
    throw Error(ErrorCode::ParseError, "unknown message type '" + type + "'");
}

json to_json(const ClientCommand& c)
{
    json j{{"schema", kSchemaVersion}};
    if (const auto* s = std::get_if<StageCommand>(&c)) {
        j["type"] = "stage";
        j["x_um"] = s->x_um;
        j["y_um"] = s->y_um;
        if (s->focus_z) j["focus_z"] = *s->focus_z;
        if (s->clamp) j["clamp"] = true;
    } else if (const auto* o = std::get_if<ObjectiveCommand>(&c)) {
        j["type"] = "objective";
        j["name"] = o->name;
    } else {
        const auto& d = std::get<DisplayCommand>(c);
        j["type"] = "display";
        j["mode"] = overlay::to_string(d.mode);
        if (d.color_space) j["color_space"] = overlay::to_string(*d.color_space);
    }
    return j;
}

} // namespace arm::service
