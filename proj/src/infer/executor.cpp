#include "arm/infer/executor.hpp"

#include "arm/common/error.hpp"

namespace arm::infer {

using net::LayerKind;

CompiledNet::CompiledNet(net::NetGraph graph)
    : CompiledNet(std::make_shared<const net::NetGraph>(std::move(graph)))
{
}

CompiledNet::CompiledNet(std::shared_ptr<const net::NetGraph> graph) : graph_(std::move(graph))
{
    if (!graph_) throw Error(ErrorCode::InvalidArgument, "null graph");
    const auto& layers = graph_->layers();
    convs_.resize(layers.size());
    last_use_.assign(layers.size(), layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::Conv) convs_[i].emplace(graph_->conv_weights(i));
        for (std::size_t in : graph_->input_indices(i)) last_use_[in] = i;
    }
    safe_ = net::validate_fcn_safe(*graph_).empty();
    geometry_ = safe_ ? net::compute_geometry(*graph_) : net::nominal_geometry(*graph_);
}

tensor::Tensor CompiledNet::forward(const tensor::Tensor& input) const
{
    const auto& g = *graph_;
    if (input.channels() != g.input_channels()) {
        throw Error(ErrorCode::ChannelMismatch, "graph '" + g.name() + "' expects " +
                                                    std::to_string(g.input_channels()) + " channels");
    }
    const auto& layers = g.layers();
    std::vector<tensor::Tensor> values(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto& ins = g.input_indices(i);
        const tensor::Tensor& x = ins.empty() ? input : values[ins.front()];
        switch (l.kind) {
        case LayerKind::Input: values[i] = input; break;
        case LayerKind::Conv: values[i] = tensor::conv2d(x, *convs_[i], l.stride, l.padding); break;
        case LayerKind::MaxPool: values[i] = tensor::pool2d(x, tensor::PoolKind::Max, l.kernel, l.stride); break;
        case LayerKind::AvgPool: values[i] = tensor::pool2d(x, tensor::PoolKind::Avg, l.kernel, l.stride); break;
        case LayerKind::AffineAct:
            values[i] = tensor::affine_act(x, g.weights().values(net::weight_name(l.name, "scale")),
                                           g.weights().values(net::weight_name(l.name, "shift")), l.activation);
            break;
        case LayerKind::Concat: {
            std::vector<tensor::Tensor> parts;
            parts.reserve(ins.size());
            for (std::size_t in : ins) parts.push_back(values[in]);
            values[i] = tensor::concat_channels(parts);
            break;
        }
        case LayerKind::Crop: values[i] = tensor::crop_border(x, l.crop); break;
        case LayerKind::LikelihoodHead: values[i] = tensor::likelihood_head(x, l.head); break;
        }
        // Release inputs whose last consumer just ran.
        for (std::size_t in : ins)
            if (last_use_[in] == i) values[in] = tensor::Tensor();
    }
    return std::move(values.back());
}

} // namespace arm::infer
