#include "arm/net/builders.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "arm/common/error.hpp"
#include "arm/net/geometry.hpp"

namespace arm::net {

namespace {

class Builder {
public:
    explicit Builder(std::uint64_t seed) : rng_(seed) {}

    std::string input(int channels)
    {
        channels_ = channels;
        LayerSpec l;
        l.name = "input";
        l.kind = LayerKind::Input;
        layers_.push_back(l);
        width_["input"] = channels;
        return l.name;
    }

    std::string conv(const std::string& name, const std::string& from, int out_c, int k, int stride = 1)
    {
        LayerSpec l;
        l.name = name;
        l.kind = LayerKind::Conv;
        l.inputs = {from};
        l.kernel = k;
        l.stride = stride;
        l.out_channels = out_c;
        layers_.push_back(l);

        const int in_c = width_.at(from);
        const double sigma = std::sqrt(2.0 / (in_c * k * k));
        std::normal_distribution<float> w(0.0f, static_cast<float>(sigma));
        std::normal_distribution<float> b(0.0f, 0.1f);
        std::vector<float> values(static_cast<std::size_t>(out_c) * in_c * k * k);
        for (auto& v : values) v = w(rng_);
        std::vector<float> bias(static_cast<std::size_t>(out_c));
        for (auto& v : bias) v = b(rng_);
        weights_.add(weight_name(name, "weight"), {out_c, in_c, k, k}, values);
        weights_.add(weight_name(name, "bias"), {out_c}, bias);
        width_[name] = out_c;
        return name;
    }

    std::string affine(const std::string& name, const std::string& from, tensor::Activation act)
    {
        LayerSpec l;
        l.name = name;
        l.kind = LayerKind::AffineAct;
        l.inputs = {from};
        l.activation = act;
        layers_.push_back(l);
        const int c = width_.at(from);
        std::uniform_real_distribution<float> scale(0.8f, 1.2f);
        std::normal_distribution<float> shift(0.0f, 0.1f);
        std::vector<float> s(static_cast<std::size_t>(c)), t(static_cast<std::size_t>(c));
        for (auto& v : s) v = scale(rng_);
        for (auto& v : t) v = shift(rng_);
        weights_.add(weight_name(name, "scale"), {c}, s);
        weights_.add(weight_name(name, "shift"), {c}, t);
        width_[name] = c;
        return name;
    }

    std::string conv_relu(const std::string& name, const std::string& from, int out_c, int k, int stride = 1)
    {
        return affine(name + "/bn", conv(name + "/conv", from, out_c, k, stride), tensor::Activation::Relu);
    }

    std::string pool(const std::string& name, const std::string& from, LayerKind kind, int k, int stride)
    {
        LayerSpec l;
        l.name = name;
        l.kind = kind;
        l.inputs = {from};
        l.kernel = k;
        l.stride = stride;
        layers_.push_back(l);
        width_[name] = width_.at(from);
        return name;
    }

    std::string crop(const std::string& name, const std::string& from, int k)
    {
        if (k == 0) return from;
        LayerSpec l;
        l.name = name;
        l.kind = LayerKind::Crop;
        l.inputs = {from};
        l.crop = k;
        layers_.push_back(l);
        width_[name] = width_.at(from);
        return name;
    }

    std::string concat(const std::string& name, const std::vector<std::string>& from)
    {
        LayerSpec l;
        l.name = name;
        l.kind = LayerKind::Concat;
        l.inputs = from;
        layers_.push_back(l);
        int total = 0;
        for (const auto& f : from) total += width_.at(f);
        width_[name] = total;
        return name;
    }

    std::string head(const std::string& name, const std::string& from, tensor::HeadKind kind)
    {
        LayerSpec l;
        l.name = name;
        l.kind = LayerKind::LikelihoodHead;
        l.inputs = {from};
        l.head = kind;
        layers_.push_back(l);
        width_[name] = width_.at(from);
        return name;
    }

    NetGraph finish(std::string name, std::string tag)
    {
        NetGraph::Header header{std::move(name), std::move(tag), channels_};
        return NetGraph::create(std::move(header), std::move(layers_), std::move(weights_));
    }

private:
    std::mt19937_64 rng_;
    int channels_ = 3;
    std::vector<LayerSpec> layers_;
    WeightStore weights_;
    std::map<std::string, int> width_;
};

// Branch extents inside a mixed block, in units of the block's input stride:
// 1x1 adds 0, 3x3 adds 2, double 3x3 adds 4, 3x3 pool + 1x1 adds 2. Crops of
// half the difference to the widest branch line them up.
std::string mixed_block(Builder& b, const std::string& prefix, const std::string& from, int branch_c)
{
    const std::string b1 = b.crop(prefix + "/b1x1/crop", b.conv_relu(prefix + "/b1x1", from, branch_c, 1), 2);

    std::string b3 = b.conv_relu(prefix + "/b3x3_reduce", from, branch_c, 1);
    b3 = b.crop(prefix + "/b3x3/crop", b.conv_relu(prefix + "/b3x3", b3, branch_c, 3), 1);

    std::string b5 = b.conv_relu(prefix + "/bdbl_reduce", from, branch_c, 1);
    b5 = b.conv_relu(prefix + "/bdbl_a", b5, branch_c, 3);
    b5 = b.conv_relu(prefix + "/bdbl_b", b5, branch_c, 3);

    std::string bp = b.pool(prefix + "/bpool/pool", from, LayerKind::AvgPool, 3, 1);
    bp = b.crop(prefix + "/bpool/crop", b.conv_relu(prefix + "/bpool", bp, branch_c, 1), 1);

    return b.concat(prefix + "/concat", {b1, b3, b5, bp});
}

// Both branches add 2 input strides of extent and halve the resolution.
std::string reduction_block(Builder& b, const std::string& prefix, const std::string& from, int conv_c)
{
    const std::string r3 = b.conv_relu(prefix + "/b3x3", from, conv_c, 3, 2);
    const std::string rp = b.pool(prefix + "/bpool", from, LayerKind::MaxPool, 3, 2);
    return b.concat(prefix + "/concat", {r3, rp});
}

// Batch-norm style calibration on a random input: every affine layer is set to
// normalize its input channels, and the logits are scaled so the positive
// class margin has zero mean and a spread of about two nats. Without this,
// random weights tend to saturate the head.
NetGraph calibrate(const NetGraph& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::uniform_real_distribution<float> gamma(0.8f, 1.2f);
    std::normal_distribution<float> beta(0.0f, 0.1f);

    const GridGeometry geo = compute_geometry(g);
    const int side = geo.canonical_patch_px + 8 * geo.output_stride_px;
    tensor::Tensor input(side, side, g.input_channels());
    for (float& v : input.data()) v = unit(rng);

    WeightStore weights = g.weights();
    const auto& layers = g.layers();
    std::vector<tensor::Tensor> values(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto& ins = g.input_indices(i);
        const tensor::Tensor& x = ins.empty() ? input : values[ins.front()];
        switch (l.kind) {
        case LayerKind::Input: values[i] = input; break;
        case LayerKind::Conv: {
            tensor::ConvWeights w = g.with_weights(weights).conv_weights(i);
            values[i] = tensor::conv2d(x, w, l.stride, l.padding);
            if (i + 2 == layers.size() && l.out_channels == 2) {
                // margin = logit1 - logit0
                double sum = 0, sq = 0;
                const auto n = static_cast<double>(values[i].height() * values[i].width());
                for (int y = 0; y < values[i].height(); ++y)
                    for (int xx = 0; xx < values[i].width(); ++xx) {
                        const double m = values[i].at(y, xx, 1) - values[i].at(y, xx, 0);
                        sum += m;
                        sq += m * m;
                    }
                const double mean = sum / n;
                const double sd = std::sqrt(std::max(sq / n - mean * mean, 1e-12));
                const auto f = static_cast<float>(2.0 / sd);
                for (float& v : w.values) v *= f;
                for (float& v : w.bias) v *= f;
                w.bias[1] -= static_cast<float>(mean * f);
                weights.assign(weight_name(l.name, "weight"), w.values);
                weights.assign(weight_name(l.name, "bias"), w.bias);
                values[i] = tensor::conv2d(x, w, l.stride, l.padding);
            }
            break;
        }
        case LayerKind::MaxPool: values[i] = tensor::pool2d(x, tensor::PoolKind::Max, l.kernel, l.stride); break;
        case LayerKind::AvgPool: values[i] = tensor::pool2d(x, tensor::PoolKind::Avg, l.kernel, l.stride); break;
        case LayerKind::AffineAct: {
            const int c = x.channels();
            std::vector<double> sum(static_cast<std::size_t>(c)), sq(static_cast<std::size_t>(c));
            for (int y = 0; y < x.height(); ++y)
                for (int xx = 0; xx < x.width(); ++xx)
                    for (int ch = 0; ch < c; ++ch) {
                        const double v = x.at(y, xx, ch);
                        sum[static_cast<std::size_t>(ch)] += v;
                        sq[static_cast<std::size_t>(ch)] += v * v;
                    }
            const double n = static_cast<double>(x.height()) * x.width();
            std::vector<float> scale(static_cast<std::size_t>(c)), shift(static_cast<std::size_t>(c));
            for (std::size_t ch = 0; ch < scale.size(); ++ch) {
                const double mean = sum[ch] / n;
                const double sd = std::sqrt(std::max(sq[ch] / n - mean * mean, 1e-12));
                const double gm = gamma(rng);
                scale[ch] = static_cast<float>(gm / sd);
                shift[ch] = static_cast<float>(beta(rng) - mean * gm / sd);
            }
            weights.assign(weight_name(l.name, "scale"), scale);
            weights.assign(weight_name(l.name, "shift"), shift);
            values[i] = tensor::affine_act(x, scale, shift, l.activation);
            break;
        }
        case LayerKind::Concat: {
            std::vector<tensor::Tensor> parts;
            for (std::size_t in : ins) parts.push_back(values[in]);
            values[i] = tensor::concat_channels(parts);
            break;
        }
        case LayerKind::Crop: values[i] = tensor::crop_border(x, l.crop); break;
        case LayerKind::LikelihoodHead: values[i] = tensor::likelihood_head(x, l.head); break;
        }
    }
    return g.with_weights(std::move(weights));
}

} // namespace

NetGraph build_mini_inception(std::uint64_t seed, const MiniInceptionConfig& config)
{
    if (config.width < 2 || config.width % 2 != 0) {
        throw Error(ErrorCode::InvalidArgument, "mini-inception width must be an even number >= 2");
    }
    if (config.stem_kernel < 1 || config.reduction_stages < 0 || config.head_pool < 0 || config.classes < 1) {
        throw Error(ErrorCode::InvalidArgument, "invalid mini-inception config");
    }
    Builder b(seed);
    const int branch_c = config.width / 2;
    std::string x = b.input(3);
    x = b.affine("stem/bn", b.conv(kMiniInceptionStem, x, config.width, config.stem_kernel), tensor::Activation::Relu);
    x = b.pool("stem/pool", x, LayerKind::MaxPool, 2, 2);
    x = mixed_block(b, "mixed0", x, branch_c);
    for (int s = 0; s < config.reduction_stages; ++s) {
        const std::string tag = std::to_string(s + 1);
        x = reduction_block(b, "reduce" + tag, x, config.width);
        x = mixed_block(b, "mixed" + tag, x, branch_c);
    }
    if (config.head_pool > 0) x = b.pool("head/pool", x, LayerKind::AvgPool, config.head_pool, 1);
    x = b.conv("logits", x, config.classes, 1);
    x = b.head("likelihood", x, config.classes == 1 ? tensor::HeadKind::Logistic : tensor::HeadKind::Softmax);
    NetGraph g = b.finish("mini-inception", config.objective_tag);
    return config.calibrate ? calibrate(g, seed) : g;
}

MiniInceptionConfig mini_inception_config_for_patch(int target_patch, int reduction_stages, int width)
{
    MiniInceptionConfig config;
    config.width = width;
    config.reduction_stages = reduction_stages;
    config.stem_kernel = 1;
    config.head_pool = 0;
    config.calibrate = false;
    const GridGeometry base = compute_geometry(build_mini_inception(0, config));
    const int stride = base.output_stride_px;
    const int missing = target_patch - base.canonical_patch_px;
    if (missing < 0) {
        throw Error(ErrorCode::InvalidArgument, "target patch " + std::to_string(target_patch) +
                                                    " is smaller than the minimal patch " +
                                                    std::to_string(base.canonical_patch_px));
    }
    // The stem kernel adds (k-1) pixels at stride 1; the head pool adds (k-1)*stride.
    config.stem_kernel = 1 + missing % stride;
    config.head_pool = missing / stride > 0 ? missing / stride + 1 : 0;
    config.calibrate = true;
    return config;
}

NetGraph build_color_detector(std::array<float, 3> target_rgb, float tolerance, std::string objective_tag)
{
    if (!(tolerance > 0.0f)) throw Error(ErrorCode::InvalidArgument, "color tolerance must be positive");

    std::vector<LayerSpec> layers;
    WeightStore weights;

    LayerSpec in;
    in.name = "input";
    in.kind = LayerKind::Input;
    layers.push_back(in);

    // Channels 2c and 2c+1 carry +(x_c - t_c) and -(x_c - t_c); relu leaves |x_c - t_c| split across them.
    LayerSpec diff;
    diff.name = "diff";
    diff.kind = LayerKind::Conv;
    diff.inputs = {"input"};
    diff.out_channels = 6;
    layers.push_back(diff);
    std::vector<float> dw(6 * 3, 0.0f), db(6, 0.0f);
    for (int c = 0; c < 3; ++c) {
        dw[static_cast<std::size_t>((2 * c) * 3 + c)] = 1.0f;
        dw[static_cast<std::size_t>((2 * c + 1) * 3 + c)] = -1.0f;
        db[static_cast<std::size_t>(2 * c)] = -target_rgb[static_cast<std::size_t>(c)];
        db[static_cast<std::size_t>(2 * c + 1)] = target_rgb[static_cast<std::size_t>(c)];
    }
    weights.add(weight_name("diff", "weight"), {6, 3, 1, 1}, dw);
    weights.add(weight_name("diff", "bias"), {6}, db);

    LayerSpec abs;
    abs.name = "abs";
    abs.kind = LayerKind::AffineAct;
    abs.inputs = {"diff"};
    abs.activation = tensor::Activation::Relu;
    layers.push_back(abs);
    weights.add(weight_name("abs", "scale"), {6}, std::vector<float>(6, 1.0f));
    weights.add(weight_name("abs", "shift"), {6}, std::vector<float>(6, 0.0f));

    // logit = beta * (1.5 * tol - d) with beta = 2 ln 9 / tol.
    const float beta = static_cast<float>(2.0 * std::log(9.0) / tolerance);
    LayerSpec score;
    score.name = "score";
    score.kind = LayerKind::Conv;
    score.inputs = {"abs"};
    score.out_channels = 1;
    layers.push_back(score);
    weights.add(weight_name("score", "weight"), {1, 6, 1, 1}, std::vector<float>(6, -beta));
    weights.add(weight_name("score", "bias"), {1}, std::vector<float>{beta * 1.5f * tolerance});

    LayerSpec head;
    head.name = "likelihood";
    head.kind = LayerKind::LikelihoodHead;
    head.inputs = {"score"};
    head.head = tensor::HeadKind::Logistic;
    layers.push_back(head);

    NetGraph::Header header{"color-detector", std::move(objective_tag), 3};
    return NetGraph::create(std::move(header), std::move(layers), std::move(weights));
}

} // namespace arm::net
