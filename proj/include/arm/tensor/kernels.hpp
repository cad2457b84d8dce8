#pragma once

#include <span>
#include <vector>

#include "arm/tensor/tensor.hpp"

namespace arm::tensor {

enum class Padding { Valid, Same };
enum class PoolKind { Max, Avg };
enum class Activation { None, Relu };
enum class HeadKind { Logistic, Softmax };

// Convolution weights in [outC, inC, kh, kw] order.
struct ConvWeights {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    std::vector<float> values;
    std::vector<float> bias; // outC entries

    ConvWeights() = default;
    ConvWeights(int out_c, int in_c, int kh, int kw);

    float& w(int oc, int ic, int ky, int kx)
    {
        return values[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
    }
    float w(int oc, int ic, int ky, int kx) const
    {
        return values[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
    }
};

// Weights rearranged to [kh, kw, inC, outC] so the innermost loop runs over
// output channels. Build once and reuse across calls.
class PackedConv {
public:
    explicit PackedConv(const ConvWeights& weights);

    int out_channels() const noexcept { return out_c_; }
    int in_channels() const noexcept { return in_c_; }
    int kernel_h() const noexcept { return kh_; }
    int kernel_w() const noexcept { return kw_; }

    const float* tap(int ky, int kx, int ic) const noexcept
    {
        return packed_.data() + ((static_cast<std::size_t>(ky) * kw_ + kx) * in_c_ + ic) * out_c_;
    }
    std::span<const float> bias() const noexcept { return bias_; }

private:
    int out_c_, in_c_, kh_, kw_;
    std::vector<float> packed_;
    std::vector<float> bias_;
};

// Output extent along one axis; throws WindowTooLarge for valid windows that do not fit.
int output_extent(int in, int k, int stride, Padding padding);

// Cross-correlation (no kernel flip). Same padding puts the odd pad pixel on
// the bottom/right. Accumulates in double, stores float.
Tensor conv2d(const Tensor& input, const ConvWeights& weights, int stride, Padding padding);
Tensor conv2d(const Tensor& input, const PackedConv& weights, int stride, Padding padding);

Tensor pool2d(const Tensor& input, PoolKind kind, int k, int stride, Padding padding = Padding::Valid);

Tensor affine_act(const Tensor& input, std::span<const float> scale, std::span<const float> shift,
                  Activation activation);

Tensor concat_channels(std::span<const Tensor> inputs);

Tensor crop_border(const Tensor& input, int k);

// One channel: logistic per element. Two or more: softmax across channels.
Tensor likelihood_head(const Tensor& input, HeadKind kind);

} // namespace arm::tensor
