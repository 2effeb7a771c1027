#include "nets/features.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace dadp {

namespace {
void check_tap(const NoisePredictorImpl& net, const FeatureTap& tap,
               const NoiseSchedule& sched) {
    if (tap.block < 0 || tap.block >= int(net.blocks().size()))
        throw ConfigError("feature tap references block " + std::to_string(tap.block) +
                          "; valid indices are 0.." + std::to_string(net.blocks().size() - 1));
    if (!sched.step_in_range(tap.step))
        throw ConfigError("feature tap step " + std::to_string(tap.step) +
                          " outside the schedule");
    if (tap.scale_div != 2 && tap.scale_div != 4 && tap.scale_div != 8)
        throw ConfigError("feature tap scale divisor must be 2, 4, or 8");
}
}  // namespace

FeatureBundle extract_structure_features(NoisePredictor& net, const torch::Tensor& x0,
                                         const std::vector<FeatureTap>& taps,
                                         const NoiseSchedule& sched,
                                         torch::Generator& noise_source, int draws) {
    if (taps.empty()) throw ConfigError("extract_structure_features: no taps configured");
    if (draws < 1) throw ConfigError("extract_structure_features: draws must be >= 1");
    for (const auto& tap : taps) check_tap(*net, tap, sched);

    torch::NoGradGuard no_grad;
    namespace F = torch::nn::functional;

    std::vector<int> steps;
    for (const auto& tap : taps) steps.push_back(tap.step);
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

    // scale -> taps in declaration order, concatenated along channels.
    FeatureBundle bundle;
    std::map<int, std::vector<torch::Tensor>> per_scale;
    for (int t : steps) {
        const double a = std::sqrt(sched.alpha_bar[t]);
        const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
        auto t_tensor = torch::full({x0.size(0)}, t, torch::kLong);
        std::map<int, std::vector<torch::Tensor>> accum;  // scale -> per-tap running mean
        for (int d = 0; d < draws; ++d) {
            auto eps = torch::randn(x0.sizes(), noise_source, x0.options());
            auto x_t = a * x0 + b * eps;
            std::vector<torch::Tensor> block_outputs;
            net->forward(x_t, t_tensor, &block_outputs);
            std::map<int, size_t> slot_in_scale;
            for (const auto& tap : taps) {
                if (tap.step != t) continue;
                auto feat = block_outputs[size_t(tap.block)];
                const int64_t th = x0.size(2) / tap.scale_div;
                const int64_t tw = x0.size(3) / tap.scale_div;
                if (feat.size(2) != th || feat.size(3) != tw)
                    feat = F::interpolate(feat, F::InterpolateFuncOptions()
                                                    .size(std::vector<int64_t>{th, tw})
                                                    .mode(torch::kBilinear)
                                                    .align_corners(false));
                auto& acc = accum[tap.scale_div];
                const size_t slot = slot_in_scale[tap.scale_div]++;
                if (d == 0) {
                    acc.push_back(feat / double(draws));
                } else {
                    acc[slot] += feat / double(draws);
                }
            }
        }
        for (auto& [scale, feats] : accum)
            for (auto& f : feats) per_scale[scale].push_back(f);
    }
    for (auto& [scale, feats] : per_scale)
        bundle[scale] = feats.size() == 1 ? feats[0] : torch::cat(feats, 1);
    return bundle;
}

std::map<int, int> bundle_channels(const NoisePredictorImpl& net,
                                   const std::vector<FeatureTap>& taps) {
    std::map<int, int> out;
    for (const auto& tap : taps) {
        if (tap.block < 0 || tap.block >= int(net.blocks().size()))
            throw ConfigError("bundle_channels: invalid block " + std::to_string(tap.block));
        out[tap.scale_div] += net.blocks()[size_t(tap.block)].channels;
    }
    return out;
}

std::vector<FeatureTap> taps_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    std::vector<FeatureTap> taps;
    for (const auto& e : j)
        taps.push_back({e.at("t").get<int>(), e.at("b").get<int>(), e.at("scale").get<int>()});
    return taps;
}

std::string taps_to_json(const std::vector<FeatureTap>& taps) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& t : taps) j.push_back({{"t", t.step}, {"b", t.block}, {"scale", t.scale_div}});
    return j.dump();
}

}  // namespace dadp
