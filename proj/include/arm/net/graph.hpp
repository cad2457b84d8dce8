#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arm/tensor/kernels.hpp"

namespace arm::net {

enum class LayerKind { Input, Conv, MaxPool, AvgPool, AffineAct, Concat, Crop, LikelihoodHead };

const char* to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Input;
    std::vector<std::string> inputs;

    int kernel = 1;
    int stride = 1;
    tensor::Padding padding = tensor::Padding::Valid;
    int crop = 0;
    int out_channels = 0;                                   // conv only
    tensor::Activation activation = tensor::Activation::None; // affine only
    tensor::HeadKind head = tensor::HeadKind::Softmax;       // head only

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct WeightEntry {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset = 0; // bytes, relative to the payload start
    std::uint64_t length = 0; // bytes

    friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

// Named float32 blocks packed back to back in one payload.
class WeightStore {
public:
    WeightStore() = default;
    WeightStore(std::vector<WeightEntry> manifest, std::vector<float> payload);

    void add(const std::string& name, std::vector<int> shape, std::span<const float> values);

    const WeightEntry* find(const std::string& name) const;
    std::span<const float> values(const std::string& name) const;
    // Replace the contents of an existing block (same length).
    void assign(const std::string& name, std::span<const float> values);

    const std::vector<WeightEntry>& manifest() const noexcept { return manifest_; }
    const std::vector<float>& payload() const noexcept { return payload_; }

    friend bool operator==(const WeightStore&, const WeightStore&) = default;

private:
    std::vector<WeightEntry> manifest_;
    std::vector<float> payload_;
    std::map<std::string, std::size_t> index_;
};

std::string weight_name(const std::string& layer, std::string_view role);

// Validated, immutable layer graph. Layers are stored in topological order.
class NetGraph {
public:
    struct Header {
        std::string name;
        std::string objective_tag;
        int input_channels = 3;
    };

    // Sorts, checks arity, names, cycles, channel flow and weight shapes.
    static NetGraph create(Header header, std::vector<LayerSpec> layers, WeightStore weights);

    const std::string& name() const noexcept { return header_.name; }
    const std::string& objective_tag() const noexcept { return header_.objective_tag; }
    int input_channels() const noexcept { return header_.input_channels; }
    const Header& header() const noexcept { return header_; }

    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    const WeightStore& weights() const noexcept { return weights_; }

    // Indices (into layers()) of a layer's inputs.
    const std::vector<std::size_t>& input_indices(std::size_t layer) const { return edges_[layer]; }
    std::size_t output_index() const noexcept { return layers_.size() - 1; }
    std::optional<std::size_t> index_of(const std::string& name) const;
    // Output channel count of each layer.
    int channels(std::size_t layer) const { return channels_[layer]; }

    tensor::ConvWeights conv_weights(std::size_t layer) const;

    // Copy with one layer's padding changed; re-validated.
    NetGraph with_padding(const std::string& layer, tensor::Padding padding) const;
    NetGraph with_weights(WeightStore weights) const;
    NetGraph with_objective_tag(std::string tag) const;

private:
    Header header_;
    std::vector<LayerSpec> layers_;
    WeightStore weights_;
    std::vector<std::vector<std::size_t>> edges_;
    std::vector<int> channels_;
};

} // namespace arm::net
