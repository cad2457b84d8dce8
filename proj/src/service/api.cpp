#include "arm/service/api.hpp"

#include <vector>

#include "arm/common/error.hpp"

namespace arm::service {

using nlohmann::json;

namespace {

struct Target {
    std::vector<std::string> parts;
    std::string query;
};

Target split_target(std::string_view target)
{
    Target t;
    if (const auto q = target.find('?'); q != std::string_view::npos) {
        t.query = std::string(target.substr(q + 1));
        target = target.substr(0, q);
    }
    std::size_t i = 0;
    while (i < target.size()) {
        while (i < target.size() && target[i] == '/') ++i;
        const auto j = target.find('/', i);
        const auto end = j == std::string_view::npos ? target.size() : j;
        if (end > i) t.parts.emplace_back(target.substr(i, end - i));
        i = end;
    }
    return t;
}

bool query_flag(const std::string& query, const std::string& key)
{
    std::size_t i = 0;
    while (i <= query.size()) {
        const auto j = std::min(query.find('&', i), query.size());
        const auto kv = query.substr(i, j - i);
        const auto eq = kv.find('=');
        const auto k = kv.substr(0, eq);
        const auto v = eq == std::string::npos ? std::string("1") : kv.substr(eq + 1);
        if (k == key) return v == "1" || v == "true";
        i = j + 1;
    }
    return false;
}

ApiResponse error(int status, const std::string& message) { return {status, json{{"error", message}}}; }

json parse_body(std::string_view body)
{
    if (body.empty()) return json::object();
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
    }
}

ApiResponse mutation(const MutationResult& r)
{
    json body{{"ok", r.status == 200}, {"state", r.state}, {"notices", r.notices}};
    if (!r.error.empty()) body["error"] = r.error;
    return {r.status, body};
}

SessionRequest session_request(const json& j)
{
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "body must be a JSON object");
    SessionRequest r;
    for (const auto& [k, v] : j.items()) {
        if (k == "slide_id") {
            if (!v.is_string()) throw Error(ErrorCode::ParseError, "slide_id must be a string");
            r.slide_id = v.get<std::string>();
        } else if (k == "fov_px") {
            if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, "fov_px must be an integer");
            r.fov_px = v.get<int>();
        } else if (k == "config") {
            r.config = v;
        } else {
            throw Error(ErrorCode::ParseError, "unknown field '" + k + "'");
        }
    }
    if (r.slide_id.empty()) throw Error(ErrorCode::ParseError, "missing field 'slide_id'");
    return r;
}

ApiResponse route(SessionManager& sessions, std::string_view method, const Target& t, std::string_view body)
{
    const auto& p = t.parts;
    if (p.size() < 2 || p[0] != "v1") return error(404, "no such endpoint");

    if (p.size() == 2 && p[1] == "slides") {
        if (method != "GET") return error(405, "use GET");
        return {200, sessions.slides()};
    }
    if (p[1] != "sessions") return error(404, "no such endpoint");

    if (p.size() == 2) {
        if (method != "POST") return error(405, "use POST");
        const auto s = sessions.create(session_request(parse_body(body)));
        return {200, json{{"session_id", s->id()}, {"state", s->state()}}};
    }

    const auto session = sessions.find(p[2]);
    if (!session) return error(404, "unknown session " + p[2]);

    if (p.size() == 3) {
        if (method == "DELETE") {
            sessions.remove(p[2]);
            return {200, json{{"ok", true}, {"session_id", p[2]}}};
        }
        if (method == "GET") return {200, session->state()};
        return error(405, "use GET or DELETE");
    }
    if (p.size() != 4) return error(404, "no such endpoint");

    const std::string& action = p[3];
    if (action == "stats") {
        if (method != "GET") return error(405, "use GET");
        return {200, session->stats()};
    }
    if (action == "stream") return error(426, "stream requires a WebSocket upgrade");
    if (method != "POST") return error(405, "use POST");
    const json j = parse_body(body);
    if (action == "stage") {
        auto cmd = parse_stage_body(j);
        cmd.clamp = query_flag(t.query, "clamp");
        return mutation(session->apply(cmd));
    }
    if (action == "objective") return mutation(session->apply(parse_objective_body(j)));
    if (action == "display") return mutation(session->apply(parse_display_body(j)));
    return error(404, "no such endpoint");
}

} // namespace

ApiResponse handle_request(SessionManager& sessions, std::string_view method, std::string_view target,
                           std::string_view body)
{
    try {
        return route(sessions, method, split_target(target), body);
    } catch (const Error& e) {
        switch (e.code()) {
        case ErrorCode::NotFound: return error(404, e.what());
        case ErrorCode::OutOfBounds: return error(422, e.what());
        case ErrorCode::ParseError:
        case ErrorCode::InvalidArgument: return error(400, e.what());
        default: return error(500, e.what());
        }
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

std::optional<std::string> stream_session_id(std::string_view target)
{
    const auto t = split_target(target);
    if (t.parts.size() == 4 && t.parts[0] == "v1" && t.parts[1] == "sessions" && t.parts[3] == "stream")
        return t.parts[2];
    return std::nullopt;
}

} // namespace arm::service
