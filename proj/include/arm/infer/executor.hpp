#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "arm/net/geometry.hpp"
#include "arm/net/graph.hpp"
#include "arm/tensor/kernels.hpp"

namespace arm::infer {

// A NetGraph with conv weights pre-packed for execution. Immutable and safe
// to share between threads.
class CompiledNet {
public:
    explicit CompiledNet(std::shared_ptr<const net::NetGraph> graph);
    explicit CompiledNet(net::NetGraph graph);

    const net::NetGraph& graph() const noexcept { return *graph_; }
    std::shared_ptr<const net::NetGraph> graph_ptr() const noexcept { return graph_; }

    bool fcn_safe() const noexcept { return safe_; }
    // compute_geometry for safe graphs, nominal_geometry otherwise.
    const net::GridGeometry& geometry() const noexcept { return geometry_; }

    // Runs every layer on `input` regardless of padding mode.
    tensor::Tensor forward(const tensor::Tensor& input) const;

private:
    std::shared_ptr<const net::NetGraph> graph_;
    std::vector<std::optional<tensor::PackedConv>> convs_;
    std::vector<std::size_t> last_use_;
    net::GridGeometry geometry_;
    bool safe_ = false;
};

} // namespace arm::infer
