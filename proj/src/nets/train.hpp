#pragma once

#include <string>
#include <vector>

#include "dadp/losses.hpp"
#include "dadp/metrics.hpp"
#include "dadp/synth.hpp"
#include "nets/depthnet.hpp"
#include "nets/unet.hpp"

namespace dadp {

struct SchedParams {
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

// Paper-scale presets (256x256 inputs, batch 8, lr 1e-4 for the noise
// predictor; batch 16, lr 5e-5 decreasing 1e-5 per five epochs for depth)
// are documented in the README; the defaults here are desk scale.

struct NoiseTrainConfig {
    std::string dataset_dir;
    std::string out_dir;
    std::string resume_from;  // optional checkpoint to continue from
    NoisePredictorConfig net;
    SchedParams sched;
    int steps = 2000;
    int batch = 8;
    double lr = 1e-4;
    uint64_t seed = 0;
    int log_every = 20;
};

struct NoiseTrainResult {
    std::string checkpoint_path;
    std::vector<double> loss_curve;
    double initial_smoothed = 0.0;
    double final_smoothed = 0.0;
    int start_step = 0;
    int end_step = 0;
};

NoiseTrainResult train_noise_predictor(const NoiseTrainConfig& cfg);

struct DepthTrainConfig {
    std::string dataset_dir;
    std::string out_dir;
    std::string noise_checkpoint;  // required when fusion is enabled
    DepthPredictorConfig net;
    SchedParams sched;
    std::vector<FeatureTap> taps;  // empty -> network defaults
    LossConfig loss;
    int steps = 1200;
    int batch = 8;
    double lr = 2e-4;
    uint64_t seed = 0;
    double sparsify_density = 0.0;  // 0 = keep the stored validity mask
    std::string sparsify_pattern = "uniform";
    // Bundles are averaged over this many noise draws; averaging suppresses
    // the stochastic component of the activations so the depth net sees the
    // structure signal rather than one noise realization.
    int feature_draws = 8;
    // Redraw the feature-extraction noise every step instead of caching one
    // averaged bundle per image up front. Costlier (draws forward passes per
    // step) and noisier per step; kept as an ablation switch.
    bool fresh_features = false;
    int log_every = 20;
};

struct DepthTrainResult {
    std::string checkpoint_path;
    std::vector<double> loss_curve;
    std::string stage1_hash;  // empty when fusion is off
};

DepthTrainResult train_depth_predictor(const DepthTrainConfig& cfg);

struct EvalConfig {
    std::string depth_checkpoint;
    std::string dataset_dir;
    std::string out_dir;  // empty: no exports
    AlignmentMode alignment = AlignmentMode::median_scale_shift;
    std::string noise_checkpoint_override;
    uint64_t seed = 0;
    bool export_maps = false;
};

struct EvalResult {
    MetricsReport merged;
    std::vector<MetricsReport> per_image;
    size_t abnormal_pixels = 0;  // inside objects, after occlusion exclusion
    size_t objects_evaluated = 0;
};

EvalResult evaluate_depth(const EvalConfig& cfg);

/// Dense prediction for one scene with a loaded model pair.
DepthMap predict_depth(DepthPredictor& depth_net, NoisePredictor* noise_net,
                       const std::vector<FeatureTap>& taps, const NoiseSchedule& sched,
                       const Image& image, uint64_t noise_seed, int feature_draws = 1);

struct LoadedDataset {
    std::vector<Scene> scenes;
    std::vector<std::string> ids;
};
LoadedDataset load_dataset(const std::string& dir);

}  // namespace dadp
