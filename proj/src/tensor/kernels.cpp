#include "arm/tensor/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "arm/common/error.hpp"

namespace arm::tensor {

namespace {

struct PadSpec {
    int out = 0;
    int before = 0;
};

PadSpec plan_axis(int in, int k, int stride, Padding padding)
{
    if (stride <= 0 || k <= 0) {
        throw Error(ErrorCode::InvalidArgument, "kernel size and stride must be positive");
    }
    if (padding == Padding::Valid) {
        if (in < k) {
            throw Error(ErrorCode::WindowTooLarge,
                        "window " + std::to_string(k) + " larger than input " + std::to_string(in));
        }
        return {(in - k) / stride + 1, 0};
    }
    const int out = (in + stride - 1) / stride;
    const int total = std::max((out - 1) * stride + k - in, 0);
    return {out, total / 2};
}

} // namespace

ConvWeights::ConvWeights(int out_c, int in_c, int kh, int kw)
    : out_channels(out_c), in_channels(in_c), kernel_h(kh), kernel_w(kw),
      values(static_cast<std::size_t>(out_c) * in_c * kh * kw, 0.0f), bias(static_cast<std::size_t>(out_c), 0.0f)
{
}

PackedConv::PackedConv(const ConvWeights& weights)
    : out_c_(weights.out_channels), in_c_(weights.in_channels), kh_(weights.kernel_h), kw_(weights.kernel_w),
      packed_(weights.values.size()), bias_(weights.bias)
{
    if (weights.values.size() != static_cast<std::size_t>(out_c_) * in_c_ * kh_ * kw_ ||
        weights.bias.size() != static_cast<std::size_t>(out_c_)) {
        throw Error(ErrorCode::ShapeMismatch, "conv weight block does not match its declared shape");
    }
    for (int oc = 0; oc < out_c_; ++oc)
        for (int ic = 0; ic < in_c_; ++ic)
            for (int ky = 0; ky < kh_; ++ky)
                for (int kx = 0; kx < kw_; ++kx)
                    packed_[((static_cast<std::size_t>(ky) * kw_ + kx) * in_c_ + ic) * out_c_ + oc] =
                        weights.w(oc, ic, ky, kx);
}

int output_extent(int in, int k, int stride, Padding padding)
{
    return plan_axis(in, k, stride, padding).out;
}

Tensor conv2d(const Tensor& input, const ConvWeights& weights, int stride, Padding padding)
{
    return conv2d(input, PackedConv(weights), stride, padding);
}

Tensor conv2d(const Tensor& input, const PackedConv& weights, int stride, Padding padding)
{
    if (weights.in_channels() != input.channels()) {
        throw Error(ErrorCode::ChannelMismatch, "conv expects " + std::to_string(weights.in_channels()) +
                                                    " input channels, got " + std::to_string(input.channels()));
    }
    const PadSpec ay = plan_axis(input.height(), weights.kernel_h(), stride, padding);
    const PadSpec ax = plan_axis(input.width(), weights.kernel_w(), stride, padding);
    const int out_c = weights.out_channels();
    const int in_c = weights.in_channels();

    Tensor out(ay.out, ax.out, out_c);
    std::vector<double> acc(static_cast<std::size_t>(out_c));
    const auto bias = weights.bias();

    for (int oy = 0; oy < ay.out; ++oy) {
        for (int ox = 0; ox < ax.out; ++ox) {
            std::copy(bias.begin(), bias.end(), acc.begin());
            for (int ky = 0; ky < weights.kernel_h(); ++ky) {
                const int iy = oy * stride + ky - ay.before;
                if (iy < 0 || iy >= input.height()) continue;
                for (int kx = 0; kx < weights.kernel_w(); ++kx) {
                    const int ix = ox * stride + kx - ax.before;
                    if (ix < 0 || ix >= input.width()) continue;
                    const auto px = input.pixel(iy, ix);
                    for (int ic = 0; ic < in_c; ++ic) {
                        const double v = px[static_cast<std::size_t>(ic)];
                        const float* w = weights.tap(ky, kx, ic);
                        for (int oc = 0; oc < out_c; ++oc) acc[static_cast<std::size_t>(oc)] += v * w[oc];
                    }
                }
            }
            auto dst = out.pixel(oy, ox);
            for (int oc = 0; oc < out_c; ++oc) dst[static_cast<std::size_t>(oc)] = static_cast<float>(acc[static_cast<std::size_t>(oc)]);
        }
    }
    return out;
}

Tensor pool2d(const Tensor& input, PoolKind kind, int k, int stride, Padding padding)
{
    if (padding != Padding::Valid) {
        throw Error(ErrorCode::InvalidArgument, "pooling supports valid padding only");
    }
    const int oh = plan_axis(input.height(), k, stride, padding).out;
    const int ow = plan_axis(input.width(), k, stride, padding).out;
    const int channels = input.channels();
    Tensor out(oh, ow, channels);
    const double inv_area = 1.0 / (static_cast<double>(k) * k);

    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            auto dst = out.pixel(oy, ox);
            for (int c = 0; c < channels; ++c) {
                double sum = 0.0;
                float best = -std::numeric_limits<float>::infinity();
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const float v = input.at(oy * stride + ky, ox * stride + kx, c);
                        sum += v;
                        best = std::max(best, v);
                    }
                }
                dst[static_cast<std::size_t>(c)] = kind == PoolKind::Max ? best : static_cast<float>(sum * inv_area);
            }
        }
    }
    return out;
}

Tensor affine_act(const Tensor& input, std::span<const float> scale, std::span<const float> shift,
                  Activation activation)
{
    const auto channels = static_cast<std::size_t>(input.channels());
    if (scale.size() != channels || shift.size() != channels) {
        throw Error(ErrorCode::ShapeMismatch, "affine vectors must have one entry per channel");
    }
    Tensor out = input;
    auto data = out.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t c = i % channels;
        const double v = static_cast<double>(scale[c]) * data[i] + shift[c];
        data[i] = static_cast<float>(activation == Activation::Relu ? std::max(v, 0.0) : v);
    }
    return out;
}

Tensor concat_channels(std::span<const Tensor> inputs)
{
    if (inputs.empty()) {
        throw Error(ErrorCode::InvalidArgument, "concat needs at least one input");
    }
    const int h = inputs.front().height();
    const int w = inputs.front().width();
    int total = 0;
    for (const auto& t : inputs) {
        if (t.height() != h || t.width() != w) {
            throw Error(ErrorCode::ShapeMismatch, "concat inputs differ spatially: " + std::to_string(h) + "x" +
                                                      std::to_string(w) + " vs " + std::to_string(t.height()) +
                                                      "x" + std::to_string(t.width()));
        }
        total += t.channels();
    }
    Tensor out(h, w, total);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto dst = out.pixel(y, x).begin();
            for (const auto& t : inputs) {
                const auto src = t.pixel(y, x);
                dst = std::copy(src.begin(), src.end(), dst);
            }
        }
    }
    return out;
}

Tensor crop_border(const Tensor& input, int k)
{
    if (k < 0) {
        throw Error(ErrorCode::InvalidArgument, "crop width must be non-negative");
    }
    if (k == 0) return input;
    if (input.height() <= 2 * k || input.width() <= 2 * k) {
        throw Error(ErrorCode::CropExhausted, "crop of " + std::to_string(k) + " exhausts " +
                                                  std::to_string(input.height()) + "x" +
                                                  std::to_string(input.width()) + " tensor");
    }
    return input.window(k, k, input.height() - 2 * k, input.width() - 2 * k);
}

Tensor likelihood_head(const Tensor& input, HeadKind kind)
{
    Tensor out = input;
    auto data = out.data();
    const auto channels = static_cast<std::size_t>(input.channels());

    if (kind == HeadKind::Logistic || channels == 1) {
        for (float& v : data) {
            const double x = v;
            const double p = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            v = static_cast<float>(p);
        }
        return out;
    }

    std::vector<double> e(channels);
    for (std::size_t base = 0; base < data.size(); base += channels) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < channels; ++c) top = std::max(top, static_cast<double>(data[base + c]));
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            e[c] = std::exp(data[base + c] - top);
            sum += e[c];
        }
        for (std::size_t c = 0; c < channels; ++c) data[base + c] = static_cast<float>(e[c] / sum);
    }
    return out;
}

} // namespace arm::tensor
