#include "nets/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "dadp/pfm.hpp"
#include "nets/checkpoint.hpp"
#include "nets/convert.hpp"
#include "nets/features.hpp"
#include "nets/loss_bridge.hpp"

namespace dadp {

namespace fs = std::filesystem;

namespace {

double window_mean(const std::vector<double>& v, size_t begin, size_t count) {
    double s = 0.0;
    size_t n = 0;
    for (size_t i = begin; i < std::min(begin + count, v.size()); ++i) {
        s += v[i];
        ++n;
    }
    return n ? s / double(n) : 0.0;
}

nlohmann::json sched_to_json(const SchedParams& s) {
    return {{"T", s.T}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}};
}

SchedParams sched_from_json(const nlohmann::json& j) {
    SchedParams s;
    s.T = j.value("T", s.T);
    s.beta_start = j.value("beta_start", s.beta_start);
    s.beta_end = j.value("beta_end", s.beta_end);
    return s;
}

torch::Generator make_generator(uint64_t seed) {
    auto gen = at::detail::createCPUGenerator();
    gen.set_current_seed(seed);
    return gen;
}

}  // namespace

LoadedDataset load_dataset(const std::string& dir) {
    DatasetManifest m = load_manifest(dir);
    if (m.ids.empty()) throw DataError("load_dataset: empty dataset at " + dir);
    LoadedDataset out;
    out.ids = m.ids;
    for (const auto& id : m.ids) out.scenes.push_back(load_scene(dir, id));
    return out;
}

NoiseTrainResult train_noise_predictor(const NoiseTrainConfig& cfg) {
    const LoadedDataset data = load_dataset(cfg.dataset_dir);
    const NoiseSchedule sched = build_schedule(cfg.sched.T, cfg.sched.beta_start,
                                               cfg.sched.beta_end);
    fs::create_directories(cfg.out_dir);

    torch::manual_seed(cfg.seed);
    NoisePredictor net(cfg.net);
    NoiseTrainResult result;
    if (!cfg.resume_from.empty()) {
        CheckpointHeader h = load_checkpoint(cfg.resume_from, "noise_predictor", *net);
        result.start_step = h.config.value("trained_steps", 0);
    }
    net->train();

    std::vector<torch::Tensor> images;
    for (const auto& s : data.scenes) images.push_back(image_to_tensor(s.image));

    auto abar = torch::empty({sched.T}, torch::kFloat32);
    for (int t = 0; t < sched.T; ++t) abar[t] = float(sched.alpha_bar[t]);

    torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(cfg.lr));
    std::mt19937_64 rng(cfg.seed ^ 0x5eedf00dULL);
    std::uniform_int_distribution<size_t> pick(0, images.size() - 1);
    std::uniform_int_distribution<int> pick_t(0, sched.T - 1);
    auto gen = make_generator(cfg.seed ^ 0xabcdULL);

    std::ofstream log(cfg.out_dir + "/noise_train_log.jsonl", std::ios::app);
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<torch::Tensor> batch;
        std::vector<int64_t> ts;
        for (int b = 0; b < cfg.batch; ++b) {
            batch.push_back(images[pick(rng)]);
            ts.push_back(pick_t(rng));
        }
        auto x0 = torch::cat(batch, 0);
        auto t = torch::tensor(ts, torch::kLong);
        auto a = abar.index_select(0, t).view({cfg.batch, 1, 1, 1});
        auto eps = torch::randn(x0.sizes(), gen, x0.options());
        auto x_t = torch::sqrt(a) * x0 + torch::sqrt(1.f - a) * eps;

        opt.zero_grad();
        auto loss = torch::mse_loss(net->forward(x_t, t), eps);
        loss.backward();
        opt.step();

        const double l = loss.item<double>();
        result.loss_curve.push_back(l);
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps)
            log << nlohmann::json{{"step", result.start_step + step}, {"loss", l}}.dump()
                << "\n";
    }
    result.end_step = result.start_step + cfg.steps;

    const size_t win = std::min<size_t>(50, result.loss_curve.size());
    result.initial_smoothed = window_mean(result.loss_curve, 0, win);
    result.final_smoothed = window_mean(result.loss_curve, result.loss_curve.size() - win, win);

    nlohmann::json config{{"net", noise_config_to_json(cfg.net)},
                          {"sched", sched_to_json(cfg.sched)},
                          {"trained_steps", result.end_step},
                          {"seed", cfg.seed}};
    result.checkpoint_path = cfg.out_dir + "/noise_predictor.ckpt";
    net->eval();
    save_checkpoint(result.checkpoint_path, "noise_predictor", config, *net);
    return result;
}

namespace {

struct FrozenNoise {
    NoisePredictor net{nullptr};
    NoiseSchedule sched;
    std::vector<FeatureTap> taps;
    std::string hash;
};

FrozenNoise load_frozen_noise(const std::string& path, std::vector<FeatureTap> taps) {
    CheckpointHeader h = read_checkpoint_header(path);
    if (h.kind != "noise_predictor")
        throw ConfigError("expected a noise_predictor checkpoint at " + path);
    FrozenNoise fz;
    fz.net = NoisePredictor(noise_config_from_json(h.config.at("net")));
    load_checkpoint(path, "noise_predictor", *fz.net);
    const SchedParams sp = sched_from_json(h.config.at("sched"));
    fz.sched = build_schedule(sp.T, sp.beta_start, sp.beta_end);
    fz.net->eval();
    for (auto& p : fz.net->parameters()) p.set_requires_grad(false);
    fz.taps = taps.empty() ? default_feature_taps(*fz.net) : std::move(taps);
    fz.hash = weight_hash(*fz.net);
    return fz;
}

}  // namespace

DepthTrainResult train_depth_predictor(const DepthTrainConfig& cfg) {
    LoadedDataset data = load_dataset(cfg.dataset_dir);
    fs::create_directories(cfg.out_dir);

    DepthTrainResult result;
    FrozenNoise frozen;
    DepthPredictorConfig net_cfg = cfg.net;
    if (net_cfg.fusion_enabled) {
        if (cfg.noise_checkpoint.empty())
            throw ConfigError("train_depth_predictor: fusion enabled without a stage-1 checkpoint");
        frozen = load_frozen_noise(cfg.noise_checkpoint, cfg.taps);
        net_cfg.structure_channels = bundle_channels(*frozen.net, frozen.taps);
        // Fusion junctions exist exactly where the taps put features.
        net_cfg.fusion_scales.clear();
        for (const auto& [scale, ch] : net_cfg.structure_channels)
            net_cfg.fusion_scales.insert(scale);
        result.stage1_hash = frozen.hash;
    }

    // Per-image preparation: sparsified supervision and occlusion masks are
    // fixed for the whole run.
    for (size_t i = 0; i < data.scenes.size(); ++i) {
        Scene& s = data.scenes[i];
        if (cfg.sparsify_density > 0.0)
            s.depth = sparsify(s.depth, cfg.sparsify_density,
                               sparsify_pattern_from_string(cfg.sparsify_pattern),
                               cfg.seed * 7919 + i);
        compute_occlusions(s.objects, s.image, cfg.loss.kmeans_k, cfg.loss.occlusion_fraction,
                           cfg.seed * 104729 + i);
    }

    torch::manual_seed(cfg.seed + 1);
    DepthPredictor net(net_cfg);
    net->train();

    std::vector<torch::Tensor> images;
    for (const auto& s : data.scenes) images.push_back(image_to_tensor(s.image));

    // Cached mode extracts one bundle per image up front; fresh mode redraws
    // noise every step.
    std::vector<FeatureBundle> cached;
    if (net_cfg.fusion_enabled && !cfg.fresh_features) {
        for (size_t i = 0; i < images.size(); ++i) {
            auto gen = make_generator(cfg.seed * 31337 + i);
            cached.push_back(extract_structure_features(frozen.net, images[i], frozen.taps,
                                                        frozen.sched, gen, cfg.feature_draws));
        }
    }

    torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(cfg.lr));
    std::mt19937_64 rng(cfg.seed ^ 0xdeedULL);
    std::uniform_int_distribution<size_t> pick(0, images.size() - 1);
    auto fresh_gen = make_generator(cfg.seed * 65537 + 11);

    std::ofstream log(cfg.out_dir + "/depth_train_log.jsonl", std::ios::app);
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<size_t> idx(size_t(cfg.batch));
        for (auto& i : idx) i = pick(rng);

        std::vector<torch::Tensor> batch;
        for (size_t i : idx) batch.push_back(images[i]);
        auto x0 = torch::cat(batch, 0);

        FeatureBundle bundle;
        if (net_cfg.fusion_enabled) {
            if (cfg.fresh_features) {
                bundle = extract_structure_features(frozen.net, x0, frozen.taps, frozen.sched,
                                                    fresh_gen, cfg.feature_draws);
            } else {
                std::map<int, std::vector<torch::Tensor>> per_scale;
                for (size_t i : idx)
                    for (const auto& [scale, feat] : cached[i]) per_scale[scale].push_back(feat);
                for (auto& [scale, feats] : per_scale) bundle[scale] = torch::cat(feats, 0);
            }
        }

        auto pred = net->forward(x0, net_cfg.fusion_enabled ? &bundle : nullptr);
        if (!torch::isfinite(pred).all().item<bool>())
            throw DataError("train_depth_predictor: non-finite prediction at step " +
                            std::to_string(step));

        std::vector<LossBatchItem> items;
        for (size_t i : idx)
            items.push_back({&data.scenes[i].depth, &data.scenes[i].objects});
        LossBreakdown bd;
        opt.zero_grad();
        auto loss = batch_total_loss(pred, items, cfg.loss, &bd);
        loss.backward();
        opt.step();

        result.loss_curve.push_back(bd.total);
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps)
            log << nlohmann::json{{"step", step},
                                  {"L_af", bd.affinity},
                                  {"L_obj", bd.integrality},
                                  {"flags",
                                   {{"bound_swaps", bd.bound_swaps},
                                    {"abnormal_pixels", bd.abnormal_pixels},
                                    {"pred_degenerate", bd.pred_degenerate},
                                    {"gt_degenerate", bd.gt_degenerate}}}}
                       .dump()
                << "\n";
    }

    if (net_cfg.fusion_enabled && weight_hash(*frozen.net) != result.stage1_hash)
        throw IntegrityError("train_depth_predictor: stage-1 weights changed during stage 2");

    nlohmann::json config{{"net", depth_config_to_json(net_cfg)},
                          {"sched", sched_to_json(cfg.sched)},
                          {"loss",
                           {{"alpha", cfg.loss.alpha},
                            {"lambda", cfg.loss.lambda},
                            {"kmeans_k", cfg.loss.kmeans_k},
                            {"occlusion_fraction", cfg.loss.occlusion_fraction}}},
                          {"trained_steps", cfg.steps},
                          {"seed", cfg.seed}};
    if (net_cfg.fusion_enabled) {
        config["taps"] = nlohmann::json::parse(taps_to_json(frozen.taps));
        config["noise_checkpoint"] = cfg.noise_checkpoint;
        config["stage1_hash"] = result.stage1_hash;
        config["feature_draws"] = cfg.feature_draws;
    }
    result.checkpoint_path = cfg.out_dir + "/depth_predictor.ckpt";
    net->eval();
    save_checkpoint(result.checkpoint_path, "depth_predictor", config, *net);
    return result;
}

DepthMap predict_depth(DepthPredictor& depth_net, NoisePredictor* noise_net,
                       const std::vector<FeatureTap>& taps, const NoiseSchedule& sched,
                       const Image& image, uint64_t noise_seed, int feature_draws) {
    torch::NoGradGuard no_grad;
    auto x0 = image_to_tensor(image);
    FeatureBundle bundle;
    const bool fused = depth_net->config().fusion_enabled;
    if (fused) {
        if (!noise_net) throw ConfigError("predict_depth: fusion model without noise predictor");
        auto gen = make_generator(noise_seed);
        bundle = extract_structure_features(*noise_net, x0, taps, sched, gen, feature_draws);
    }
    auto pred = depth_net->forward(x0, fused ? &bundle : nullptr);
    return tensor_to_depth(pred);
}

EvalResult evaluate_depth(const EvalConfig& cfg) {
    CheckpointHeader h = read_checkpoint_header(cfg.depth_checkpoint);
    if (h.kind != "depth_predictor")
        throw ConfigError("evaluate_depth: not a depth checkpoint: " + cfg.depth_checkpoint);
    DepthPredictorConfig net_cfg = depth_config_from_json(h.config.at("net"));
    DepthPredictor net(net_cfg);
    load_checkpoint(cfg.depth_checkpoint, "depth_predictor", *net);
    net->eval();

    LossConfig loss_cfg;
    if (h.config.contains("loss")) {
        const auto& lj = h.config.at("loss");
        loss_cfg.alpha = lj.value("alpha", loss_cfg.alpha);
        loss_cfg.kmeans_k = lj.value("kmeans_k", loss_cfg.kmeans_k);
        loss_cfg.occlusion_fraction = lj.value("occlusion_fraction", loss_cfg.occlusion_fraction);
    }

    FrozenNoise frozen;
    if (net_cfg.fusion_enabled) {
        std::string noise_path = cfg.noise_checkpoint_override.empty()
                                     ? h.config.value("noise_checkpoint", "")
                                     : cfg.noise_checkpoint_override;
        if (noise_path.empty())
            throw ConfigError("evaluate_depth: fusion checkpoint without a noise predictor path");
        std::vector<FeatureTap> taps;
        if (h.config.contains("taps")) taps = taps_from_json(h.config.at("taps").dump());
        frozen = load_frozen_noise(noise_path, taps);
        const std::string recorded = h.config.value("stage1_hash", "");
        if (!recorded.empty() && recorded != frozen.hash)
            throw IntegrityError("evaluate_depth: stage-1 hash mismatch between depth "
                                 "checkpoint and noise predictor weights");
    }

    LoadedDataset data = load_dataset(cfg.dataset_dir);
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

    EvalResult out;
    for (size_t i = 0; i < data.scenes.size(); ++i) {
        Scene& s = data.scenes[i];
        DepthMap pred = predict_depth(net, net_cfg.fusion_enabled ? &frozen.net : nullptr,
                                      frozen.taps, frozen.sched, s.image, cfg.seed * 6151 + i,
                                      h.config.value("feature_draws", 1));
        out.per_image.push_back(compute_metrics(pred, s.depth, cfg.alignment));

        compute_occlusions(s.objects, s.image, loss_cfg.kmeans_k, loss_cfg.occlusion_fraction,
                           cfg.seed * 104729 + i);
        const TotalLossResult lr = total_loss(pred, s.depth, s.objects, loss_cfg, false);
        out.abnormal_pixels += lr.breakdown.abnormal_pixels;
        out.objects_evaluated += size_t(s.objects.K);

        if (cfg.export_maps && !cfg.out_dir.empty()) {
            save_depth_pfm(pred, cfg.out_dir + "/" + data.ids[i] + ".pred.pfm");
            save_depth_viz_png(pred, cfg.out_dir + "/" + data.ids[i] + ".pred.png");
        }
    }
    out.merged = merge_reports(out.per_image);
    return out;
}

}  // namespace dadp
