#include "nets/depthnet.hpp"

namespace dadp {

namespace {
int norm_groups(int channels) {
    for (int g = 8; g > 1; --g)
        if (channels % g == 0) return g;
    return 1;
}

torch::nn::Sequential conv_block(int in_ch, int out_ch) {
    return torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, out_ch, 3).padding(1)),
        torch::nn::GroupNorm(norm_groups(out_ch), out_ch), torch::nn::SiLU(),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(out_ch, out_ch, 3).padding(1)),
        torch::nn::GroupNorm(norm_groups(out_ch), out_ch), torch::nn::SiLU());
}
}  // namespace

FeatureFusionImpl::FeatureFusionImpl(int detail_ch, int structure_ch) {
    proj = register_module(
        "proj", torch::nn::Conv2d(torch::nn::Conv2dOptions(structure_ch, detail_ch, 1)));
    fuse1 = register_module(
        "fuse1", torch::nn::Conv2d(torch::nn::Conv2dOptions(detail_ch * 2, detail_ch, 3).padding(1)));
    norm = register_module("norm", torch::nn::GroupNorm(norm_groups(detail_ch), detail_ch));
    fuse2 = register_module(
        "fuse2", torch::nn::Conv2d(torch::nn::Conv2dOptions(detail_ch, detail_ch, 3).padding(1)));
    // Zero start: the fused path is an identity until training moves it.
    torch::nn::init::zeros_(fuse2->weight);
    torch::nn::init::zeros_(fuse2->bias);
}

torch::Tensor FeatureFusionImpl::forward(const torch::Tensor& detail,
                                         const torch::Tensor& structure) {
    if (detail.size(2) != structure.size(2) || detail.size(3) != structure.size(3))
        throw ShapeError("FeatureFusion: spatial mismatch between detail and structure");
    auto s = proj(structure);
    auto h = fuse2(torch::silu(norm(fuse1(torch::cat({detail, s}, 1)))));
    return detail + h;
}

DepthPredictorImpl::DepthPredictorImpl(const DepthPredictorConfig& config) : config_(config) {
    const auto& ec = config.encoder_channels;
    const auto& dc = config.decoder_channels;
    if (ec.size() != 4 || dc.size() != 4)
        throw ConfigError("DepthPredictor: expected 4 encoder and 4 decoder widths");
    if (config.fusion_enabled && config.fusion_scales.empty())
        throw ConfigError("DepthPredictor: fusion enabled with no fusion scales");

    int in_ch = 3;
    for (int l = 0; l < 4; ++l) {
        enc_.push_back(conv_block(in_ch, ec[l]));
        register_module("enc" + std::to_string(l), enc_.back());
        if (l < 3) {
            down_.push_back(torch::nn::Conv2d(
                torch::nn::Conv2dOptions(ec[l], ec[l], 3).stride(2).padding(1)));
            register_module("down" + std::to_string(l), down_.back());
        }
        in_ch = ec[l];
    }
    // Decoder stages at scale divisors 8, 4, 2, 1.
    const int stage_in[4] = {ec[3], dc[0] + ec[2], dc[1] + ec[1], dc[2] + ec[0]};
    for (int s = 0; s < 4; ++s) {
        dec_.push_back(conv_block(stage_in[s], dc[s]));
        register_module("dec" + std::to_string(s), dec_.back());
    }
    if (config.fusion_enabled) {
        const int stage_scale[3] = {8, 4, 2};
        const int stage_out[3] = {dc[0], dc[1], dc[2]};
        for (int s = 0; s < 3; ++s) {
            if (!config.fusion_scales.count(stage_scale[s])) continue;
            auto it = config.structure_channels.find(stage_scale[s]);
            if (it == config.structure_channels.end())
                throw ConfigError("DepthPredictor: structure channel count missing for scale 1/" +
                                  std::to_string(stage_scale[s]));
            fusion_.emplace(stage_scale[s], FeatureFusion(stage_out[s], it->second));
            register_module("ffm" + std::to_string(stage_scale[s]),
                            fusion_.at(stage_scale[s]));
        }
    }
    head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(dc[3], 1, 1)));
}

torch::Tensor DepthPredictorImpl::forward(const torch::Tensor& x0,
                                          const FeatureBundle* features) {
    namespace F = torch::nn::functional;
    if (x0.dim() != 4 || x0.size(1) != 3) throw ShapeError("DepthPredictor: expected [B,3,H,W]");
    if (x0.size(2) % 8 != 0 || x0.size(3) % 8 != 0)
        throw ShapeError("DepthPredictor: spatial size must be a multiple of 8");
    if (config_.fusion_enabled) {
        if (!features) throw ConfigError("DepthPredictor: fusion enabled but no bundle given");
        for (int s : config_.fusion_scales)
            if (!features->count(s))
                throw ConfigError("DepthPredictor: bundle missing scale 1/" + std::to_string(s));
    }

    std::vector<torch::Tensor> skips;
    auto x = x0;
    for (int l = 0; l < 4; ++l) {
        x = enc_[l]->forward(x);
        skips.push_back(x);
        if (l < 3) x = down_[size_t(l)](x);
    }

    auto up2 = [](const torch::Tensor& t) {
        return F::interpolate(t, F::InterpolateFuncOptions()
                                     .scale_factor(std::vector<double>{2.0, 2.0})
                                     .mode(torch::kNearest));
    };
    const int stage_scale[4] = {8, 4, 2, 1};
    x = dec_[0]->forward(x);
    for (int s = 0; s < 4; ++s) {
        if (s > 0) x = dec_[s]->forward(torch::cat({up2(x), skips[3 - s]}, 1));
        auto it = fusion_.find(stage_scale[s]);
        if (it != fusion_.end() && config_.fusion_enabled)
            x = it->second->as<FeatureFusionImpl>()->forward(x, features->at(stage_scale[s]));
    }
    return head(x);
}

}  // namespace dadp
