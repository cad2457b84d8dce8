#include "arm/net/graph.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <numeric>
#include <set>

#include "arm/common/error.hpp"

namespace arm::net {

const char* to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::AffineAct: return "affine_act";
    case LayerKind::Concat: return "concat";
    case LayerKind::Crop: return "crop";
    case LayerKind::LikelihoodHead: return "likelihood_head";
    }
    return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text)
{
    for (auto kind : {LayerKind::Input, LayerKind::Conv, LayerKind::MaxPool, LayerKind::AvgPool,
                      LayerKind::AffineAct, LayerKind::Concat, LayerKind::Crop, LayerKind::LikelihoodHead}) {
        if (text == to_string(kind)) return kind;
    }
    return std::nullopt;
}

std::string weight_name(const std::string& layer, std::string_view role)
{
    return layer + "/" + std::string(role);
}

// ---------------------------------------------------------------------------
// WeightStore

namespace {

std::uint64_t element_count(const std::vector<int>& shape)
{
    std::uint64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw Error(ErrorCode::ShapeMismatch, "weight shape dimensions must be positive");
        n *= static_cast<std::uint64_t>(d);
    }
    return n;
}

std::string shape_text(const std::vector<int>& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
}

} // namespace

WeightStore::WeightStore(std::vector<WeightEntry> manifest, std::vector<float> payload)
    : manifest_(std::move(manifest)), payload_(std::move(payload))
{
    const std::uint64_t payload_bytes = payload_.size() * sizeof(float);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    for (std::size_t i = 0; i < manifest_.size(); ++i) {
        const auto& e = manifest_[i];
        if (e.length != element_count(e.shape) * sizeof(float)) {
            throw Error(ErrorCode::ShapeMismatch, "weight '" + e.name + "' length " + std::to_string(e.length) +
                                                      " does not match shape " + shape_text(e.shape));
        }
        if (e.offset % sizeof(float) != 0 || e.offset + e.length > payload_bytes) {
            throw Error(ErrorCode::ShapeMismatch, "weight '" + e.name + "' lies outside the payload");
        }
        if (!index_.emplace(e.name, i).second) {
            throw Error(ErrorCode::ParseError, "duplicate weight name '" + e.name + "'");
        }
        spans.emplace_back(e.offset, e.offset + e.length);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].first < spans[i - 1].second) {
            throw Error(ErrorCode::ShapeMismatch, "weight blocks overlap");
        }
    }
}

void WeightStore::add(const std::string& name, std::vector<int> shape, std::span<const float> values)
{
    const std::uint64_t n = element_count(shape);
    if (n != values.size()) {
        throw Error(ErrorCode::ShapeMismatch, "weight '" + name + "' has " + std::to_string(values.size()) +
                                                  " values for shape " + shape_text(shape));
    }
    if (index_.count(name)) throw Error(ErrorCode::InvalidArgument, "duplicate weight name '" + name + "'");
    const std::uint64_t offset = payload_.size() * sizeof(float);
    payload_.insert(payload_.end(), values.begin(), values.end());
    index_.emplace(name, manifest_.size());
    manifest_.push_back({name, std::move(shape), offset, n * sizeof(float)});
}

const WeightEntry* WeightStore::find(const std::string& name) const
{
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &manifest_[it->second];
}

std::span<const float> WeightStore::values(const std::string& name) const
{
    const auto* e = find(name);
    if (!e) throw Error(ErrorCode::NotFound, "no weight block named '" + name + "'");
    return {payload_.data() + e->offset / sizeof(float), e->length / sizeof(float)};
}

void WeightStore::assign(const std::string& name, std::span<const float> values)
{
    const auto* e = find(name);
    if (!e) throw Error(ErrorCode::NotFound, "no weight block named '" + name + "'");
    if (values.size() * sizeof(float) != e->length) {
        throw Error(ErrorCode::ShapeMismatch, "replacement for '" + name + "' has wrong length");
    }
    std::copy(values.begin(), values.end(), payload_.begin() + static_cast<std::ptrdiff_t>(e->offset / sizeof(float)));
}

// ---------------------------------------------------------------------------
// NetGraph

namespace {

void check_params(const LayerSpec& l)
{
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::ParseError, "layer '" + l.name + "': " + why);
    };
    switch (l.kind) {
    case LayerKind::Input:
        if (!l.inputs.empty()) fail("input layer takes no inputs");
        return;
    case LayerKind::Concat:
        if (l.inputs.size() < 2) fail("concat needs at least two inputs");
        return;
    default:
        if (l.inputs.size() != 1) fail("expects exactly one input");
    }
    if (l.kernel < 1 || l.stride < 1) fail("kernel and stride must be positive");
    if (l.kind == LayerKind::Crop && l.crop < 0) fail("crop width must be non-negative");
    if (l.kind == LayerKind::Conv && l.out_channels < 1) fail("conv needs out_channels >= 1");
    if ((l.kind == LayerKind::MaxPool || l.kind == LayerKind::AvgPool) && l.padding != tensor::Padding::Valid) {
        fail("pooling supports valid padding only");
    }
}

void expect_shape(const WeightStore& weights, const std::string& name, const std::vector<int>& shape)
{
    const auto* e = weights.find(name);
    if (!e) throw Error(ErrorCode::ShapeMismatch, "missing weight block '" + name + "'");
    if (e->shape != shape) {
        throw Error(ErrorCode::ShapeMismatch, "weight '" + name + "' has shape " + shape_text(e->shape) +
                                                  ", expected " + shape_text(shape));
    }
}

} // namespace

NetGraph NetGraph::create(Header header, std::vector<LayerSpec> layers, WeightStore weights)
{
    if (header.input_channels < 1) throw Error(ErrorCode::ParseError, "input_channels must be positive");
    if (layers.empty()) throw Error(ErrorCode::ParseError, "graph has no layers");

    std::map<std::string, std::size_t> by_name;
    std::size_t input_count = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        check_params(layers[i]);
        if (!by_name.emplace(layers[i].name, i).second) {
            throw Error(ErrorCode::ParseError, "duplicate layer name '" + layers[i].name + "'");
        }
        input_count += layers[i].kind == LayerKind::Input;
    }
    if (input_count != 1) throw Error(ErrorCode::ParseError, "graph must have exactly one input layer");

    // Kahn's algorithm, keeping declaration order among ready layers.
    std::vector<std::size_t> pending(layers.size(), 0);
    std::vector<std::vector<std::size_t>> consumers(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (const auto& in : layers[i].inputs) {
            auto it = by_name.find(in);
            if (it == by_name.end()) {
                throw Error(ErrorCode::DanglingInput,
                            "layer '" + layers[i].name + "' reads undeclared layer '" + in + "'");
            }
            consumers[it->second].push_back(i);
            ++pending[i];
        }
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (pending[i] == 0) ready.insert(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        const std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(i);
        for (std::size_t c : consumers[i])
            if (--pending[c] == 0) ready.insert(c);
    }
    if (order.size() != layers.size()) throw Error(ErrorCode::CycleDetected, "layer graph contains a cycle");

    std::size_t sinks = 0;
    for (const auto& c : consumers) sinks += c.empty();
    if (sinks != 1) throw Error(ErrorCode::ParseError, "graph must have exactly one output layer");

    NetGraph g;
    g.header_ = std::move(header);
    g.weights_ = std::move(weights);
    std::map<std::string, std::size_t> position;
    for (std::size_t i : order) {
        position[layers[i].name] = g.layers_.size();
        g.layers_.push_back(std::move(layers[i]));
    }
    g.edges_.resize(g.layers_.size());
    g.channels_.resize(g.layers_.size());
    for (std::size_t i = 0; i < g.layers_.size(); ++i) {
        const auto& l = g.layers_[i];
        for (const auto& in : l.inputs) g.edges_[i].push_back(position.at(in));
        const int in_c = l.inputs.empty() ? g.header_.input_channels : g.channels_[g.edges_[i].front()];
        switch (l.kind) {
        case LayerKind::Input: g.channels_[i] = g.header_.input_channels; break;
        case LayerKind::Conv:
            expect_shape(g.weights_, weight_name(l.name, "weight"), {l.out_channels, in_c, l.kernel, l.kernel});
            expect_shape(g.weights_, weight_name(l.name, "bias"), {l.out_channels});
            g.channels_[i] = l.out_channels;
            break;
        case LayerKind::AffineAct:
            expect_shape(g.weights_, weight_name(l.name, "scale"), {in_c});
            expect_shape(g.weights_, weight_name(l.name, "shift"), {in_c});
            g.channels_[i] = in_c;
            break;
        case LayerKind::Concat: {
            int total = 0;
            for (std::size_t e : g.edges_[i]) total += g.channels_[e];
            g.channels_[i] = total;
            break;
        }
        default: g.channels_[i] = in_c;
        }
    }
    return g;
}

std::optional<std::size_t> NetGraph::index_of(const std::string& name) const
{
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].name == name) return i;
    return std::nullopt;
}

tensor::ConvWeights NetGraph::conv_weights(std::size_t layer) const
{
    const auto& l = layers_.at(layer);
    if (l.kind != LayerKind::Conv) throw Error(ErrorCode::InvalidArgument, "layer '" + l.name + "' is not a conv");
    const int in_c = channels_[edges_[layer].front()];
    tensor::ConvWeights w(l.out_channels, in_c, l.kernel, l.kernel);
    const auto values = weights_.values(weight_name(l.name, "weight"));
    const auto bias = weights_.values(weight_name(l.name, "bias"));
    std::copy(values.begin(), values.end(), w.values.begin());
    std::copy(bias.begin(), bias.end(), w.bias.begin());
    return w;
}

NetGraph NetGraph::with_padding(const std::string& layer, tensor::Padding padding) const
{
    auto layers = layers_;
    auto it = std::find_if(layers.begin(), layers.end(), [&](const LayerSpec& l) { return l.name == layer; });
    if (it == layers.end()) throw Error(ErrorCode::NotFound, "no layer named '" + layer + "'");
    it->padding = padding;
    return create(header_, std::move(layers), weights_);
}

NetGraph NetGraph::with_weights(WeightStore weights) const
{
    return create(header_, layers_, std::move(weights));
}

NetGraph NetGraph::with_objective_tag(std::string tag) const
{
    NetGraph g = *this;
    g.header_.objective_tag = std::move(tag);
    return g;
}

} // namespace arm::net
