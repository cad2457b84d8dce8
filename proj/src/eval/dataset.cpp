#include "arm/eval/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "arm/common/error.hpp"
#include "arm/infer/heatmap.hpp"

namespace arm::eval {

namespace {

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Label parse_label(const std::string& s, int line)
{
    if (s == "tumor" || s == "1") return Label::Tumor;
    if (s == "benign" || s == "0") return Label::Benign;
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": unknown label '" + s + "'");
}

double parse_score(const std::string& s, int line)
{
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad score '" + s + "'");
    return v;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

} // namespace

std::vector<LabeledFOV> read_manifest(std::istream& is, const std::filesystem::path& base_dir, const ImageScorer& scorer)
{
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::EmptyInput, "manifest is empty");
    std::map<std::string, std::size_t> col;
    const auto header = split(line);
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"fov_id", "label"})
        if (!col.count(need)) throw Error(ErrorCode::ParseError, std::string("manifest lacks column ") + need);
    if (!col.count("score") && !col.count("heatmap_path") && !col.count("image_path"))
        throw Error(ErrorCode::ParseError, "manifest needs score, heatmap_path or image_path");

    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    std::vector<LabeledFOV> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        auto get = [&](const char* name) -> std::string {
            const auto it = col.find(name);
            return it != col.end() && it->second < cells.size() ? cells[it->second] : std::string{};
        };
        LabeledFOV f;
        f.id = get("fov_id");
        f.label = parse_label(get("label"), lineno);
        f.magnification = get("magnification");
        f.source = get("source");
        f.heatmap_path = get("heatmap_path");
        const auto score = get("score");
        f.image_path = get("image_path");
        const auto& image = f.image_path;
        if (!score.empty()) {
            f.score = parse_score(score, lineno);
        } else if (!f.heatmap_path.empty()) {
            f.score = fov_likelihood(infer::import_heatmap(resolve(f.heatmap_path)));
        } else if (!image.empty() && scorer) {
            f.score = scorer(resolve(image));
        } else {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": no score source");
        }
        if (f.score < 0.0 || f.score > 1.0)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": score outside [0,1]");
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<LabeledFOV> read_manifest(const std::filesystem::path& path, const ImageScorer& scorer)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open manifest " + path.string());
    return read_manifest(in, path.parent_path(), scorer);
}

void write_manifest(std::ostream& os, const std::vector<LabeledFOV>& data)
{
    os << "fov_id,label,score,magnification,source,heatmap_path,image_path\n";
    for (const auto& f : data)
        os << f.id << ',' << (f.label == Label::Tumor ? "tumor" : "benign") << ',' << fmt(f.score) << ','
           << f.magnification << ',' << f.source << ',' << f.heatmap_path << ',' << f.image_path << '\n';
}

void write_roc_csv(std::ostream& os, const RocCurve& roc)
{
    os << "fpr,tpr,threshold\n";
    for (const auto& p : roc.points)
        os << fmt(p.fpr) << ',' << fmt(p.tpr) << ',' << (std::isinf(p.threshold) ? "inf" : fmt(p.threshold)) << '\n';
}

void write_metrics_csv(std::ostream& os, double auc, const std::optional<BootstrapResult>& auc_ci,
                       const std::vector<OperatingPoint>& points)
{
    os << "name,threshold,metric,value,lo,hi,tp,tn,fp,fn\n";
    os << "auc,NA,auc," << fmt(auc) << ',' << (auc_ci ? fmt(auc_ci->lo) : "NA") << ','
       << (auc_ci ? fmt(auc_ci->hi) : "NA") << ",NA,NA,NA,NA\n";
    for (const auto& p : points) {
        auto row = [&](const char* metric, const std::optional<double>& v, const std::optional<MetricCI>& ci) {
            os << p.name << ',' << fmt(p.threshold) << ',' << metric << ',' << fmt(v) << ','
               << (ci ? fmt(ci->lo) : "NA") << ',' << (ci ? fmt(ci->hi) : "NA") << ',' << p.counts.tp << ','
               << p.counts.tn << ',' << p.counts.fp << ',' << p.counts.fn << '\n';
        };
        row("accuracy", p.metrics.accuracy, p.accuracy_ci);
        row("precision", p.metrics.precision, p.precision_ci);
        row("recall", p.metrics.recall, p.recall_ci);
        row("fpr", p.metrics.fpr, std::nullopt);
    }
}

} // namespace arm::eval
