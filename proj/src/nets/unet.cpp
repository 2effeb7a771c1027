#include "nets/unet.hpp"

#include <cmath>

namespace dadp {

namespace {
int norm_groups(int channels) {
    for (int g = 8; g > 1; --g)
        if (channels % g == 0) return g;
    return 1;
}
}  // namespace

ResBlockImpl::ResBlockImpl(int in_ch, int out_ch, int emb_ch, Resample resample)
    : resample_(resample) {
    norm1 = register_module("norm1", torch::nn::GroupNorm(norm_groups(in_ch), in_ch));
    conv1 = register_module(
        "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1)));
    emb_proj = register_module("emb_proj", torch::nn::Linear(emb_ch, out_ch));
    norm2 = register_module("norm2", torch::nn::GroupNorm(norm_groups(out_ch), out_ch));
    conv2 = register_module(
        "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out_ch, out_ch, 3).padding(1)));
    if (in_ch != out_ch || resample != Resample::none)
        skip = register_module("skip",
                               torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 1)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& emb) {
    namespace F = torch::nn::functional;
    auto resize = [&](const torch::Tensor& h) {
        switch (resample_) {
            case Resample::down:
                return F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
            case Resample::up:
                return F::interpolate(
                    h, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0})
                           .mode(torch::kNearest));
            default:
                return h;
        }
    };
    auto h = torch::silu(norm1(x));
    h = conv1(resize(h));
    h = h + emb_proj(torch::silu(emb)).unsqueeze(-1).unsqueeze(-1);
    h = conv2(torch::silu(norm2(h)));
    auto s = resize(x);
    if (skip) s = skip(s);
    return s + h;
}

SelfAttention2dImpl::SelfAttention2dImpl(int channels, int heads) : heads_(heads) {
    while (channels % heads_ != 0) heads_ /= 2;
    norm = register_module("norm", torch::nn::GroupNorm(norm_groups(channels), channels));
    qkv = register_module("qkv",
                          torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels * 3, 1)));
    proj = register_module("proj",
                           torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 1)));
}

torch::Tensor SelfAttention2dImpl::forward(const torch::Tensor& x) {
    const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
    const auto hd = c / heads_;
    auto qkv_out = qkv(norm(x)).reshape({b, 3, heads_, hd, h * w});
    auto q = qkv_out.select(1, 0), k = qkv_out.select(1, 1), v = qkv_out.select(1, 2);
    auto attn = torch::softmax(q.transpose(-2, -1).matmul(k) / std::sqrt(double(hd)), -1);
    auto out = v.matmul(attn.transpose(-2, -1)).reshape({b, c, h, w});
    return x + proj(out);
}

NoisePredictorImpl::NoisePredictorImpl(const NoisePredictorConfig& config) : config_(config) {
    const int L = config.num_resolutions;
    if (L < 2) throw ConfigError("NoisePredictor: need at least 2 resolutions");
    if (int(config.channel_mult.size()) < L)
        throw ConfigError("NoisePredictor: channel_mult shorter than num_resolutions");
    if (config.resblocks_per_resolution < 1)
        throw ConfigError("NoisePredictor: resblocks_per_resolution must be >= 1");
    for (int res : config.attention_resolutions) {
        bool produced = false;
        for (int l = 0; l < L; ++l) produced |= config.image_size >> l == res;
        if (!produced)
            throw ConfigError("NoisePredictor: attention resolution " + std::to_string(res) +
                              " is not produced by " + std::to_string(L) + " levels at size " +
                              std::to_string(config.image_size));
    }

    const int emb_ch = config.step_embedding_dim * 4;
    time1 = register_module("time1", torch::nn::Linear(config.step_embedding_dim, emb_ch));
    time2 = register_module("time2", torch::nn::Linear(emb_ch, emb_ch));

    auto ch = [&](int l) { return config.base_channels * config.channel_mult[l]; };
    stem = register_module("stem",
                           torch::nn::Conv2d(torch::nn::Conv2dOptions(3, ch(0), 3).padding(1)));

    auto wants_attention = [&](int level) {
        return config.attention_resolutions.count(config.image_size >> level) > 0;
    };

    concat_skip_.clear();
    push_skip_.clear();
    int cur = ch(0);
    auto add_block = [&](ResBlock block, const std::string& role, int level, int out_ch,
                         bool attn, int concat_level, int push_level) {
        const int idx = int(res_blocks_.size());
        res_blocks_.push_back(block);
        register_module("block" + std::to_string(idx), res_blocks_.back());
        SelfAttention2d a{nullptr};
        if (attn) {
            a = SelfAttention2d(out_ch);
            register_module("attn" + std::to_string(idx), a);
        }
        attentions_.push_back(a);
        block_info_.push_back({idx, role, 1 << level, out_ch});
        concat_skip_.push_back(concat_level);
        push_skip_.push_back(push_level);
        cur = out_ch;
    };

    // Encoder.
    for (int l = 0; l < L; ++l) {
        for (int r = 0; r < config.resblocks_per_resolution; ++r) {
            const bool last = r == config.resblocks_per_resolution - 1;
            add_block(ResBlock(cur, ch(l), emb_ch, ResBlockImpl::Resample::none), "enc", l,
                      ch(l), wants_attention(l), -1, last ? l : -1);
        }
        if (l < L - 1)
            add_block(ResBlock(cur, ch(l + 1), emb_ch, ResBlockImpl::Resample::down), "down",
                      l + 1, ch(l + 1), false, -1, -1);
    }
    // Bottleneck: two residual blocks, attention after the first.
    add_block(ResBlock(cur, ch(L - 1), emb_ch, ResBlockImpl::Resample::none), "mid", L - 1,
              ch(L - 1), wants_attention(L - 1), -1, -1);
    add_block(ResBlock(cur, ch(L - 1), emb_ch, ResBlockImpl::Resample::none), "mid", L - 1,
              ch(L - 1), false, -1, -1);
    // Decoder.
    for (int l = L - 1; l >= 0; --l) {
        for (int r = 0; r < config.resblocks_per_resolution; ++r) {
            const int in_ch = r == 0 ? cur + ch(l) : cur;  // skip concat on entry
            add_block(ResBlock(in_ch, ch(l), emb_ch, ResBlockImpl::Resample::none), "dec", l,
                      ch(l), wants_attention(l), r == 0 ? l : -1, -1);
        }
        if (l > 0)
            add_block(ResBlock(cur, ch(l - 1), emb_ch, ResBlockImpl::Resample::up), "up", l - 1,
                      ch(l - 1), false, -1, -1);
    }

    head_norm = register_module("head_norm", torch::nn::GroupNorm(norm_groups(cur), cur));
    head = register_module("head",
                           torch::nn::Conv2d(torch::nn::Conv2dOptions(cur, 3, 3).padding(1)));
}

torch::Tensor NoisePredictorImpl::time_embedding(const torch::Tensor& t) {
    const int dim = config_.step_embedding_dim;
    const int half = dim / 2;
    auto freqs = torch::exp(torch::arange(half, torch::kFloat64) *
                            (-std::log(10000.0) / double(half)))
                     .to(t.device());
    auto args = t.to(torch::kFloat64).unsqueeze(1) * freqs.unsqueeze(0);
    auto emb = torch::cat({torch::cos(args), torch::sin(args)}, 1).to(torch::kFloat32);
    if (dim % 2 == 1) emb = torch::constant_pad_nd(emb, {0, 1});
    return time2(torch::silu(time1(emb)));
}

void NoisePredictorImpl::check_spatial(const torch::Tensor& x) const {
    const int mult = 1 << (config_.num_resolutions - 1);
    if (x.dim() != 4 || x.size(1) != 3)
        throw ShapeError("NoisePredictor: expected [B,3,H,W] input");
    if (x.size(2) % mult != 0 || x.size(3) % mult != 0)
        throw ShapeError("NoisePredictor: spatial size must be a multiple of " +
                         std::to_string(mult));
}

torch::Tensor NoisePredictorImpl::forward(const torch::Tensor& x_t, const torch::Tensor& t,
                                          std::vector<torch::Tensor>* block_outputs) {
    check_spatial(x_t);
    auto emb = time_embedding(t);
    auto x = stem(x_t);
    std::vector<torch::Tensor> skips(config_.num_resolutions);
    for (size_t i = 0; i < res_blocks_.size(); ++i) {
        if (concat_skip_[i] >= 0) x = torch::cat({x, skips[concat_skip_[i]]}, 1);
        x = res_blocks_[i]->as<ResBlockImpl>()->forward(x, emb);
        if (attentions_[i]) x = attentions_[i]->as<SelfAttention2dImpl>()->forward(x);
        if (block_outputs) block_outputs->push_back(x);
        if (push_skip_[i] >= 0) skips[push_skip_[i]] = x;
    }
    return head(torch::silu(head_norm(x)));
}

std::vector<FeatureTap> default_feature_taps(const NoisePredictorImpl& net) {
    const auto& blocks = net.blocks();
    std::vector<FeatureTap> taps;
    auto first_dec_at = [&](int scale_div) {
        for (const auto& b : blocks)
            if (b.role == "dec" && b.scale_div == scale_div) return b.index;
        throw ConfigError("default_feature_taps: no decoder block at 1/" +
                          std::to_string(scale_div));
    };
    taps.push_back({50, first_dec_at(2), 2});
    taps.push_back({100, first_dec_at(4), 4});
    // Three taps at the deepest scale: last bottleneck block plus the two
    // decoder blocks sitting at 1/8.
    std::vector<int> deep;
    for (const auto& b : blocks)
        if ((b.role == "mid" || b.role == "dec") && b.scale_div == 8) deep.push_back(b.index);
    if (deep.size() < 3)
        throw ConfigError("default_feature_taps: fewer than three blocks at 1/8");
    for (size_t i = deep.size() - 3; i < deep.size(); ++i) taps.push_back({150, deep[i], 8});
    return taps;
}

}  // namespace dadp
