#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>
#include <string>

#include "nets/depthnet.hpp"
#include "nets/unet.hpp"

namespace dadp {

// Single-file checkpoint: magic, length-prefixed JSON header (kind, config,
// weight hash), then the libtorch parameter archive.

struct CheckpointHeader {
    std::string kind;  // "noise_predictor" or "depth_predictor"
    nlohmann::json config;
    std::string weight_hash;
};

/// SHA-256 over the raw float bytes of all parameters and buffers in
/// name-sorted order; stable across serialization formats.
std::string weight_hash(const torch::nn::Module& module);

void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& config, torch::nn::Module& module);

CheckpointHeader read_checkpoint_header(const std::string& path);

/// Loads weights into a module built by the caller from the header's config;
/// verifies the stored hash against the reloaded weights.
CheckpointHeader load_checkpoint(const std::string& path, const std::string& expected_kind,
                                 torch::nn::Module& module);

nlohmann::json noise_config_to_json(const NoisePredictorConfig& c);
NoisePredictorConfig noise_config_from_json(const nlohmann::json& j);
nlohmann::json depth_config_to_json(const DepthPredictorConfig& c);
DepthPredictorConfig depth_config_from_json(const nlohmann::json& j);

}  // namespace dadp
