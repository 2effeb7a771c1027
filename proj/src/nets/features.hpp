#pragma once

#include <torch/torch.h>

#include <vector>

#include "dadp/schedule.hpp"
#include "nets/depthnet.hpp"
#include "nets/unet.hpp"

namespace dadp {

/// Runs the frozen noise predictor at every tapped diffusion step and collects
/// the requested block activations, bilinearly resized to their target scale;
/// taps sharing a scale are concatenated along channels. The bundle is the
/// average over `draws` independent noise realizations (one forward pass per
/// distinct step per draw) — averaging suppresses the noise component of the
/// activations while keeping the structure signal. Deterministic given the
/// generator state.
FeatureBundle extract_structure_features(NoisePredictor& net, const torch::Tensor& x0,
                                         const std::vector<FeatureTap>& taps,
                                         const NoiseSchedule& sched,
                                         torch::Generator& noise_source, int draws = 1);

/// Per-scale channel counts the bundle will carry for these taps.
std::map<int, int> bundle_channels(const NoisePredictorImpl& net,
                                   const std::vector<FeatureTap>& taps);

std::vector<FeatureTap> taps_from_json(const std::string& json_text);
std::string taps_to_json(const std::vector<FeatureTap>& taps);

}  // namespace dadp
