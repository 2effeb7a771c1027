#pragma once

#include <torch/torch.h>

#include <set>
#include <string>
#include <vector>

#include "dadp/grid.hpp"
#include "dadp/schedule.hpp"

namespace dadp {

struct NoisePredictorConfig {
    int base_channels = 16;
    int num_resolutions = 4;  // input scale down to 1/2^(num_resolutions-1)
    std::vector<int> channel_mult = {1, 2, 2, 4};
    std::set<int> attention_resolutions = {16, 8};  // spatial sizes, not divisors
    int resblocks_per_resolution = 2;
    int step_embedding_dim = 64;
    int image_size = 64;  // resolution the attention set refers to
};

struct BlockInfo {
    int index = 0;
    std::string role;   // "enc", "down", "mid", "dec", "up"
    int scale_div = 1;  // output spatial size = input / scale_div
    int channels = 0;
};

class ResBlockImpl : public torch::nn::Module {
  public:
    enum class Resample { none, down, up };

    ResBlockImpl(int in_ch, int out_ch, int emb_ch, Resample resample);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& emb);

  private:
    torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::nn::Linear emb_proj{nullptr};
    torch::nn::Conv2d skip{nullptr};  // 1x1, only when channels change
    Resample resample_;
};
TORCH_MODULE(ResBlock);

class SelfAttention2dImpl : public torch::nn::Module {
  public:
    SelfAttention2dImpl(int channels, int heads = 4);
    torch::Tensor forward(const torch::Tensor& x);

  private:
    torch::nn::GroupNorm norm{nullptr};
    torch::nn::Conv2d qkv{nullptr}, proj{nullptr};
    int heads_;
};
TORCH_MODULE(SelfAttention2d);

/// Noise-prediction UNet: per-resolution residual blocks, BigGAN-style
/// residual up/down blocks, self-attention at the configured spatial sizes,
/// sinusoidal step embedding. Blocks are numbered sequentially over
/// encoder -> bottleneck -> decoder starting at 0; intermediate activations
/// are addressable by that index.
class NoisePredictorImpl : public torch::nn::Module {
  public:
    explicit NoisePredictorImpl(const NoisePredictorConfig& config);

    /// Returns eps_hat; if block_outputs is non-null it receives the
    /// post-block (and post-attention, where attached) activation of every
    /// block in index order.
    torch::Tensor forward(const torch::Tensor& x_t, const torch::Tensor& t,
                          std::vector<torch::Tensor>* block_outputs = nullptr);

    const std::vector<BlockInfo>& blocks() const { return block_info_; }
    const NoisePredictorConfig& config() const { return config_; }
    void check_spatial(const torch::Tensor& x) const;

  private:
    NoisePredictorConfig config_;
    torch::nn::Linear time1{nullptr}, time2{nullptr};
    torch::nn::Conv2d stem{nullptr}, head{nullptr};
    torch::nn::GroupNorm head_norm{nullptr};
    std::vector<ResBlock> res_blocks_;          // in block-index order
    std::vector<SelfAttention2d> attentions_;   // parallel: null where absent
    std::vector<BlockInfo> block_info_;
    std::vector<int> concat_skip_;  // level to concat before the block (-1 none)
    std::vector<int> push_skip_;    // level whose skip is recorded after the block (-1 none)
    torch::Tensor time_embedding(const torch::Tensor& t);
};
TORCH_MODULE(NoisePredictor);

/// Desk-scale default taps mirroring the full-scale (t, b) choices:
/// one 1/2-scale tap at t=50, one 1/4-scale tap at t=100, and three
/// 1/8-scale taps at t=150.
struct FeatureTap {
    int step = 0;
    int block = 0;
    int scale_div = 2;  // one of 2, 4, 8
};

std::vector<FeatureTap> default_feature_taps(const NoisePredictorImpl& net);

}  // namespace dadp
