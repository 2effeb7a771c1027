#pragma once

#include <torch/torch.h>

#include <map>
#include <set>
#include <vector>

#include "dadp/grid.hpp"

namespace dadp {

/// Structure-aware features grouped by output scale divisor (2, 4, 8).
using FeatureBundle = std::map<int, torch::Tensor>;

struct DepthPredictorConfig {
    std::vector<int> encoder_channels = {16, 32, 64, 64};  // full, 1/2, 1/4, 1/8
    std::vector<int> decoder_channels = {64, 64, 32, 16};  // 1/8 ... full
    std::set<int> fusion_scales = {2, 4, 8};
    bool fusion_enabled = true;
    std::map<int, int> structure_channels;  // per scale divisor, required if fused
};

/// Projects structure features to the detail width, concatenates, and applies
/// a residual convolution whose final projection starts at zero, so an
/// untrained fusion path is an exact identity over the detail features.
class FeatureFusionImpl : public torch::nn::Module {
  public:
    FeatureFusionImpl(int detail_ch, int structure_ch);
    torch::Tensor forward(const torch::Tensor& detail, const torch::Tensor& structure);

  private:
    torch::nn::Conv2d proj{nullptr}, fuse1{nullptr}, fuse2{nullptr};
    torch::nn::GroupNorm norm{nullptr};
};
TORCH_MODULE(FeatureFusion);

/// Stand-in single-image depth predictor: 4-level convolutional
/// encoder-decoder with skip connections; fusion points sit at the decoder
/// stages whose scale matches the bundle.
class DepthPredictorImpl : public torch::nn::Module {
  public:
    explicit DepthPredictorImpl(const DepthPredictorConfig& config);

    /// Dense depth [B,1,H,W]. The bundle is required (with every configured
    /// scale) when fusion is enabled and ignored otherwise.
    torch::Tensor forward(const torch::Tensor& x0, const FeatureBundle* features = nullptr);

    const DepthPredictorConfig& config() const { return config_; }

  private:
    DepthPredictorConfig config_;
    std::vector<torch::nn::Sequential> enc_;
    std::vector<torch::nn::Conv2d> down_;
    std::vector<torch::nn::Sequential> dec_;
    std::map<int, FeatureFusion> fusion_;  // keyed by scale divisor
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(DepthPredictor);

}  // namespace dadp
