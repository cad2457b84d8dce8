#pragma once

// Naive reference implementations used only by tests. They share no code
// with the kernels they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "arm/tensor/kernels.hpp"

namespace oracle {

using arm::tensor::Tensor;

inline Tensor random_tensor(int h, int w, int c, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f)
{
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(h, w, c);
    for (float& v : t.data()) v = u(rng);
    return t;
}

inline arm::tensor::ConvWeights random_weights(int out_c, int in_c, int k, std::mt19937_64& rng)
{
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    arm::tensor::ConvWeights w(out_c, in_c, k, k);
    for (float& v : w.values) v = u(rng);
    for (float& v : w.bias) v = u(rng);
    return w;
}

// Six nested loops over (oc, oy, ox, ic, ky, kx); explicit zero padding.
inline Tensor conv(const Tensor& in, const arm::tensor::ConvWeights& w, int stride, bool same)
{
    int oh, ow, pad_t = 0, pad_l = 0;
    if (same) {
        oh = (in.height() + stride - 1) / stride;
        ow = (in.width() + stride - 1) / stride;
        pad_t = std::max((oh - 1) * stride + w.kernel_h - in.height(), 0) / 2;
        pad_l = std::max((ow - 1) * stride + w.kernel_w - in.width(), 0) / 2;
    } else {
        oh = (in.height() - w.kernel_h) / stride + 1;
        ow = (in.width() - w.kernel_w) / stride + 1;
    }
    Tensor out(oh, ow, w.out_channels);
    for (int oc = 0; oc < w.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = w.bias[static_cast<std::size_t>(oc)];
                for (int ic = 0; ic < w.in_channels; ++ic)
                    for (int ky = 0; ky < w.kernel_h; ++ky)
                        for (int kx = 0; kx < w.kernel_w; ++kx) {
                            const int y = oy * stride + ky - pad_t;
                            const int x = ox * stride + kx - pad_l;
                            if (y < 0 || x < 0 || y >= in.height() || x >= in.width()) continue;
                            acc += static_cast<double>(in.at(y, x, ic)) * w.w(oc, ic, ky, kx);
                        }
                out.at(oy, ox, oc) = static_cast<float>(acc);
            }
    return out;
}

inline Tensor pool(const Tensor& in, bool is_max, int k, int stride)
{
    const int oh = (in.height() - k) / stride + 1;
    const int ow = (in.width() - k) / stride + 1;
    Tensor out(oh, ow, in.channels());
    for (int c = 0; c < in.channels(); ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                std::vector<float> window;
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) window.push_back(in.at(oy * stride + ky, ox * stride + kx, c));
                double sum = 0;
                for (float v : window) sum += v;
                out.at(oy, ox, c) = is_max ? *std::max_element(window.begin(), window.end())
                                           : static_cast<float>(sum / window.size());
            }
    return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    return m;
}

} // namespace oracle
