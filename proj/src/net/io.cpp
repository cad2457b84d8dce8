#include "arm/net/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "arm/common/error.hpp"

namespace arm::net {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'R', 'M', 'W'};
constexpr std::size_t kHeaderBytes = 5;

const char* padding_name(tensor::Padding p) { return p == tensor::Padding::Valid ? "valid" : "same"; }

tensor::Padding parse_padding(const std::string& s)
{
    if (s == "valid") return tensor::Padding::Valid;
    if (s == "same") return tensor::Padding::Same;
    throw Error(ErrorCode::ParseError, "unknown padding '" + s + "'");
}

json layer_to_json(const LayerSpec& l)
{
    json j = {{"name", l.name}, {"kind", to_string(l.kind)}};
    if (!l.inputs.empty()) j["inputs"] = l.inputs;
    switch (l.kind) {
    case LayerKind::Conv:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["padding"] = padding_name(l.padding);
        j["out_channels"] = l.out_channels;
        break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["padding"] = padding_name(l.padding);
        break;
    case LayerKind::Crop: j["k"] = l.crop; break;
    case LayerKind::AffineAct: j["activation"] = l.activation == tensor::Activation::Relu ? "relu" : "none"; break;
    case LayerKind::LikelihoodHead: j["head"] = l.head == tensor::HeadKind::Softmax ? "softmax" : "logistic"; break;
    default: break;
    }
    return j;
}

LayerSpec layer_from_json(const json& j)
{
    LayerSpec l;
    l.name = j.at("name").get<std::string>();
    const auto kind_text = j.at("kind").get<std::string>();
    const auto kind = parse_layer_kind(kind_text);
    if (!kind) throw Error(ErrorCode::ParseError, "layer '" + l.name + "' has unknown kind '" + kind_text + "'");
    l.kind = *kind;
    if (j.contains("inputs")) l.inputs = j.at("inputs").get<std::vector<std::string>>();
    l.kernel = j.value("kernel", 1);
    l.stride = j.value("stride", 1);
    l.padding = parse_padding(j.value("padding", std::string("valid")));
    l.crop = j.value("k", 0);
    l.out_channels = j.value("out_channels", 0);
    const auto act = j.value("activation", std::string("none"));
    if (act != "relu" && act != "none") throw Error(ErrorCode::ParseError, "unknown activation '" + act + "'");
    l.activation = act == "relu" ? tensor::Activation::Relu : tensor::Activation::None;
    const auto head = j.value("head", std::string("softmax"));
    if (head != "softmax" && head != "logistic") throw Error(ErrorCode::ParseError, "unknown head '" + head + "'");
    l.head = head == "softmax" ? tensor::HeadKind::Softmax : tensor::HeadKind::Logistic;
    return l;
}

} // namespace

std::vector<std::uint8_t> encode_weights(const std::vector<float>& payload)
{
    std::vector<std::uint8_t> out(kHeaderBytes + payload.size() * 4);
    std::memcpy(out.data(), kMagic, 4);
    out[4] = kWeightsVersion;
    std::size_t pos = kHeaderBytes;
    for (float f : payload) {
        const auto bits = std::bit_cast<std::uint32_t>(f);
        for (int b = 0; b < 4; ++b) out[pos++] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return out;
}

std::vector<float> decode_weights(const std::vector<std::uint8_t>& blob)
{
    if (blob.size() < kHeaderBytes || std::memcmp(blob.data(), kMagic, 4) != 0) {
        throw Error(ErrorCode::ParseError, "weights blob lacks ARMW magic");
    }
    if (blob[4] != kWeightsVersion) {
        throw Error(ErrorCode::ParseError, "unsupported weights version " + std::to_string(blob[4]));
    }
    const std::size_t body = blob.size() - kHeaderBytes;
    if (body % 4 != 0) throw Error(ErrorCode::ShapeMismatch, "weights payload is not a whole number of floats");
    std::vector<float> out(body / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(blob[kHeaderBytes + 4 * i + b]) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

std::string graph_to_text(const NetGraph& g)
{
    json layers = json::array();
    for (const auto& l : g.layers()) layers.push_back(layer_to_json(l));
    json weights = json::array();
    for (const auto& e : g.weights().manifest()) {
        weights.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}, {"length", e.length}});
    }
    json doc = {{"format", kGraphFormat},
                {"name", g.name()},
                {"objective_tag", g.objective_tag()},
                {"input_channels", g.input_channels()},
                {"layers", layers},
                {"weights", weights}};
    return doc.dump(2) + "\n";
}

NetGraph graph_from_text(const std::string& text, const std::vector<std::uint8_t>& blob)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("graph manifest: ") + e.what());
    }
    try {
        if (doc.value("format", std::string()) != kGraphFormat) {
            throw Error(ErrorCode::ParseError, "graph manifest format must be '" + std::string(kGraphFormat) + "'");
        }
        NetGraph::Header header;
        header.name = doc.value("name", std::string("unnamed"));
        header.objective_tag = doc.value("objective_tag", std::string());
        header.input_channels = doc.value("input_channels", 3);

        std::vector<LayerSpec> layers;
        for (const auto& lj : doc.at("layers")) layers.push_back(layer_from_json(lj));

        std::vector<WeightEntry> manifest;
        if (doc.contains("weights")) {
            for (const auto& wj : doc.at("weights")) {
                manifest.push_back({wj.at("name").get<std::string>(), wj.at("shape").get<std::vector<int>>(),
                                    wj.at("offset").get<std::uint64_t>(), wj.at("length").get<std::uint64_t>()});
            }
        }
        WeightStore store(std::move(manifest), decode_weights(blob));
        return NetGraph::create(std::move(header), std::move(layers), std::move(store));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("graph manifest: ") + e.what());
    }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

void save_graph(const NetGraph& g, const std::filesystem::path& graph_file, const std::filesystem::path& weights_file)
{
    write_text(graph_file, graph_to_text(g));
    write_bytes(weights_file, encode_weights(g.weights().payload()));
}

NetGraph load_graph(const std::filesystem::path& graph_file, const std::filesystem::path& weights_file)
{
    return graph_from_text(read_text(graph_file), read_bytes(weights_file));
}

std::filesystem::path weights_path_for(const std::filesystem::path& graph_file)
{
    auto p = graph_file;
    return p.replace_extension(".armw");
}

NetGraph load_graph(const std::filesystem::path& graph_file)
{
    return load_graph(graph_file, weights_path_for(graph_file));
}

} // namespace arm::net
