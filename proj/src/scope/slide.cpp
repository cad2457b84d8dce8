#include "arm/scope/slide.hpp"

#include <algorithm>

#include <json.hpp>

#include "arm/common/error.hpp"
#include "arm/common/png_io.hpp"
#include "arm/net/io.hpp"

namespace arm::scope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json meta_json(const VirtualSlide& slide)
{
    json ann = json::array();
    for (const auto& a : slide.annotations) {
        json pts = json::array();
        for (const auto& p : a.polygon) pts.push_back({p[0], p[1]});
        ann.push_back({{"label", a.label}, {"polygon", pts}});
    }
    return {{"id", slide.id},
            {"base_um_per_px", slide.base_um_per_px},
            {"width", slide.image.width()},
            {"height", slide.image.height()},
            {"annotations", ann}};
}

SlideInfo parse_meta(const fs::path& path)
{
    SlideInfo info;
    try {
        const json j = json::parse(net::read_text(path));
        info.id = j.at("id").get<std::string>();
        info.base_um_per_px = j.at("base_um_per_px").get<double>();
        info.width = j.value("width", 0);
        info.height = j.value("height", 0);
        for (const auto& a : j.value("annotations", json::array())) {
            Annotation ann;
            ann.label = a.at("label").get<std::string>();
            for (const auto& p : a.at("polygon")) ann.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            info.annotations.push_back(std::move(ann));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    if (info.base_um_per_px <= 0.0) throw Error(ErrorCode::ParseError, path.string() + ": base_um_per_px must be > 0");
    return info;
}

} // namespace

void save_slide(const fs::path& dir, const VirtualSlide& slide)
{
    fs::create_directories(dir);
    write_png_rgb8(dir / (slide.id + ".png"), slide.image);
    net::write_text(dir / (slide.id + ".meta"), meta_json(slide).dump(2));
}

VirtualSlide load_slide(const fs::path& dir, const std::string& id)
{
    const fs::path meta = dir / (id + ".meta");
    if (!fs::exists(meta)) throw Error(ErrorCode::NotFound, "no slide '" + id + "' in " + dir.string());
    SlideInfo info = parse_meta(meta);
    VirtualSlide slide;
    slide.id = info.id;
    slide.base_um_per_px = info.base_um_per_px;
    slide.annotations = std::move(info.annotations);
    slide.image = read_png_rgb(dir / (id + ".png"));
    return slide;
}

std::vector<SlideInfo> list_slides(const fs::path& dir)
{
    std::vector<SlideInfo> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".meta") out.push_back(parse_meta(entry.path()));
    std::sort(out.begin(), out.end(), [](const SlideInfo& a, const SlideInfo& b) { return a.id < b.id; });
    return out;
}

const std::vector<std::string>& objective_names()
{
    static const std::vector<std::string> names{"4X", "10X", "20X", "40X"};
    return names;
}

Objective make_objective(const std::string& name, double sensor_pitch_um)
{
    const auto& names = objective_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw Error(ErrorCode::NotFound, "unknown objective '" + name + "'");
    Objective o;
    o.name = name;
    o.magnification = std::stod(name.substr(0, name.size() - 1));
    o.um_per_px = sensor_pitch_um / o.magnification;
    return o;
}

bool pose_in_bounds(const VirtualSlide& slide, const StagePose& pose) noexcept
{
    return pose.x_um >= 0.0 && pose.y_um >= 0.0 && pose.x_um <= slide.width_um() && pose.y_um <= slide.height_um();
}

StagePose clamp_pose(const VirtualSlide& slide, StagePose pose) noexcept
{
    pose.x_um = std::clamp(pose.x_um, 0.0, slide.width_um());
    pose.y_um = std::clamp(pose.y_um, 0.0, slide.height_um());
    return pose;
}

} // namespace arm::scope
