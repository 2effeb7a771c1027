// Command-line front end: synth-data, sparsify, train-noise, train-depth,
// eval, viz-features. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 integrity error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dadp/metrics.hpp"
#include "dadp/pfm.hpp"
#include "dadp/synth.hpp"
#include "nets/checkpoint.hpp"
#include "nets/features.hpp"
#include "nets/train.hpp"
#include "nets/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --config JSON is applied as defaults before flag parsing, so explicit flags
// win. The effective merged config lands next to every artifact.
json load_config_arg(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") {
            std::ifstream f(argv[i + 1]);
            if (!f) throw dadp::ConfigError(std::string("cannot read config ") + argv[i + 1]);
            return json::parse(f);
        }
    return json::object();
}

template <typename T>
void from_cfg(const json& cfg, const char* key, T& value) {
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

void write_effective_config(const std::string& out_dir, const json& cfg) {
    fs::create_directories(out_dir);
    std::ofstream f(out_dir + "/config.json");
    f << cfg.dump(2) << "\n";
}

struct SynthArgs {
    std::string out;
    int count = 16, size = 64;
    uint64_t seed = 0;
};

int cmd_synth_data(CLI::App& app, const json& cfg0) {
    auto a = std::make_shared<SynthArgs>();
    from_cfg(cfg0, "count", a->count);
    from_cfg(cfg0, "size", a->size);
    from_cfg(cfg0, "seed", a->seed);
    app.add_option("--out", a->out)->required();
    app.add_option("--count", a->count);
    app.add_option("--size", a->size);
    app.add_option("--seed", a->seed);
    app.callback([a] {
        const auto& [out, count, size, seed] = *a;
        dadp::DatasetManifest m;
        for (int i = 0; i < count; ++i) {
            char id[32];
            std::snprintf(id, sizeof(id), "scene_%04d", i);
            dadp::Scene s = dadp::synth_scene(seed * 1000003ull + uint64_t(i), size);
            dadp::write_scene(s, out, id);
            m.ids.push_back(id);
            m.densities.push_back(s.depth.density());
        }
        dadp::write_manifest(m, out);
        write_effective_config(out, {{"count", count}, {"size", size}, {"seed", seed}});
        std::cout << json{{"written", count}, {"dir", out}}.dump() << "\n";
    });
    return 0;
}

struct SparsifyArgs {
    std::string dataset, out, pattern = "uniform";
    double density = 0.01;
    uint64_t seed = 0;
};

int cmd_sparsify(CLI::App& app, const json& cfg0) {
    auto a = std::make_shared<SparsifyArgs>();
    from_cfg(cfg0, "density", a->density);
    from_cfg(cfg0, "pattern", a->pattern);
    from_cfg(cfg0, "seed", a->seed);
    app.add_option("--dataset", a->dataset)->required();
    app.add_option("--out", a->out)->required();
    app.add_option("--density", a->density);
    app.add_option("--pattern", a->pattern)->check(CLI::IsMember({"uniform", "scanline"}));
    app.add_option("--seed", a->seed);
    app.callback([a] {
        const auto& [dataset, out, pattern, density, seed] = *a;
        dadp::DatasetManifest m = dadp::load_manifest(dataset);
        dadp::DatasetManifest out_m;
        json per_image = json::array();
        fs::create_directories(out);
        for (size_t i = 0; i < m.ids.size(); ++i) {
            dadp::Scene s = dadp::load_scene(dataset, m.ids[i]);
            dadp::DepthMap sparse =
                dadp::sparsify(s.depth, density, dadp::sparsify_pattern_from_string(pattern),
                               seed * 7919ull + i);
            fs::copy_file(dataset + "/" + m.ids[i] + ".png", out + "/" + m.ids[i] + ".png",
                          fs::copy_options::overwrite_existing);
            fs::copy_file(dataset + "/" + m.ids[i] + ".masks.png",
                          out + "/" + m.ids[i] + ".masks.png",
                          fs::copy_options::overwrite_existing);
            dadp::save_depth_pfm(sparse, out + "/" + m.ids[i] + ".depth.pfm");
            out_m.ids.push_back(m.ids[i]);
            out_m.densities.push_back(sparse.density());
            per_image.push_back({{"id", m.ids[i]}, {"achieved_density", sparse.density()}});
        }
        dadp::write_manifest(out_m, out);
        write_effective_config(
            out, {{"density", density}, {"pattern", pattern}, {"seed", seed}});
        std::cout << json{{"images", per_image}}.dump() << "\n";
    });
    return 0;
}

int cmd_train_noise(CLI::App& app, const json& cfg0) {
    auto cfg = std::make_shared<dadp::NoiseTrainConfig>();
    from_cfg(cfg0, "steps", cfg->steps);
    from_cfg(cfg0, "batch", cfg->batch);
    from_cfg(cfg0, "lr", cfg->lr);
    from_cfg(cfg0, "seed", cfg->seed);
    from_cfg(cfg0, "T", cfg->sched.T);
    from_cfg(cfg0, "beta_start", cfg->sched.beta_start);
    from_cfg(cfg0, "beta_end", cfg->sched.beta_end);
    from_cfg(cfg0, "base_channels", cfg->net.base_channels);
    app.add_option("--dataset", cfg->dataset_dir)->required();
    app.add_option("--out", cfg->out_dir)->required();
    app.add_option("--steps", cfg->steps);
    app.add_option("--batch", cfg->batch);
    app.add_option("--lr", cfg->lr);
    app.add_option("--seed", cfg->seed);
    app.add_option("--T", cfg->sched.T);
    app.add_option("--beta-start", cfg->sched.beta_start);
    app.add_option("--beta-end", cfg->sched.beta_end);
    app.add_option("--base-channels", cfg->net.base_channels);
    app.add_option("--resume", cfg->resume_from);
    app.callback([cfg] {
        if (!fs::exists(cfg->dataset_dir + "/manifest.json"))
            throw dadp::DataError("dataset not found: " + cfg->dataset_dir);
        const auto r = dadp::train_noise_predictor(*cfg);
        write_effective_config(cfg->out_dir,
                               {{"steps", cfg->steps},
                                {"batch", cfg->batch},
                                {"lr", cfg->lr},
                                {"seed", cfg->seed},
                                {"T", cfg->sched.T},
                                {"beta_start", cfg->sched.beta_start},
                                {"beta_end", cfg->sched.beta_end},
                                {"base_channels", cfg->net.base_channels},
                                {"dataset", cfg->dataset_dir}});
        std::cout << json{{"checkpoint", r.checkpoint_path},
                          {"start_step", r.start_step},
                          {"end_step", r.end_step},
                          {"initial_smoothed_mse", r.initial_smoothed},
                          {"final_smoothed_mse", r.final_smoothed}}
                         .dump()
                  << "\n";
    });
    return 0;
}

int cmd_train_depth(CLI::App& app, const json& cfg0) {
    auto cfg = std::make_shared<dadp::DepthTrainConfig>();
    auto taps_json = std::make_shared<std::string>();
    from_cfg(cfg0, "steps", cfg->steps);
    from_cfg(cfg0, "batch", cfg->batch);
    from_cfg(cfg0, "lr", cfg->lr);
    from_cfg(cfg0, "seed", cfg->seed);
    from_cfg(cfg0, "lambda", cfg->loss.lambda);
    from_cfg(cfg0, "alpha", cfg->loss.alpha);
    from_cfg(cfg0, "density", cfg->sparsify_density);
    from_cfg(cfg0, "pattern", cfg->sparsify_pattern);
    from_cfg(cfg0, "fusion", cfg->net.fusion_enabled);
    from_cfg(cfg0, "fresh_features", cfg->fresh_features);
    from_cfg(cfg0, "feature_draws", cfg->feature_draws);
    from_cfg(cfg0, "taps", *taps_json);
    app.add_option("--dataset", cfg->dataset_dir)->required();
    app.add_option("--out", cfg->out_dir)->required();
    app.add_option("--noise-ckpt", cfg->noise_checkpoint);
    app.add_option("--steps", cfg->steps);
    app.add_option("--batch", cfg->batch);
    app.add_option("--lr", cfg->lr);
    app.add_option("--seed", cfg->seed);
    app.add_option("--lambda", cfg->loss.lambda);
    app.add_option("--alpha", cfg->loss.alpha);
    app.add_option("--density", cfg->sparsify_density);
    app.add_option("--pattern", cfg->sparsify_pattern)
        ->check(CLI::IsMember({"uniform", "scanline"}));
    app.add_flag("--fusion,!--no-fusion", cfg->net.fusion_enabled);
    app.add_flag("--fresh-features,!--cached-features", cfg->fresh_features);
    app.add_option("--feature-draws", cfg->feature_draws)->check(CLI::PositiveNumber);
    app.add_option("--taps", *taps_json, "JSON array [{\"t\":..,\"b\":..,\"scale\":..}]");
    app.callback([cfg, taps_json] {
        if (!fs::exists(cfg->dataset_dir + "/manifest.json"))
            throw dadp::DataError("dataset not found: " + cfg->dataset_dir);
        if (cfg->net.fusion_enabled && !fs::exists(cfg->noise_checkpoint))
            throw dadp::ConfigError("stage-1 checkpoint not found: " + cfg->noise_checkpoint);
        if (!taps_json->empty()) cfg->taps = dadp::taps_from_json(*taps_json);
        const auto r = dadp::train_depth_predictor(*cfg);
        write_effective_config(cfg->out_dir,
                               {{"steps", cfg->steps},
                                {"batch", cfg->batch},
                                {"lr", cfg->lr},
                                {"seed", cfg->seed},
                                {"lambda", cfg->loss.lambda},
                                {"alpha", cfg->loss.alpha},
                                {"density", cfg->sparsify_density},
                                {"pattern", cfg->sparsify_pattern},
                                {"fusion", cfg->net.fusion_enabled},
                                {"fresh_features", cfg->fresh_features},
                                {"feature_draws", cfg->feature_draws},
                                {"dataset", cfg->dataset_dir},
                                {"noise_ckpt", cfg->noise_checkpoint}});
        std::cout << json{{"checkpoint", r.checkpoint_path},
                          {"final_loss", r.loss_curve.empty() ? 0.0 : r.loss_curve.back()},
                          {"stage1_hash", r.stage1_hash}}
                         .dump()
                  << "\n";
    });
    return 0;
}

int cmd_eval(CLI::App& app, const json& cfg0) {
    auto cfg = std::make_shared<dadp::EvalConfig>();
    auto alignment = std::make_shared<std::string>("median_scale_shift");
    from_cfg(cfg0, "seed", cfg->seed);
    from_cfg(cfg0, "alignment", *alignment);
    app.add_option("--ckpt", cfg->depth_checkpoint)->required();
    app.add_option("--dataset", cfg->dataset_dir)->required();
    app.add_option("--out", cfg->out_dir);
    app.add_option("--alignment", *alignment)
        ->check(CLI::IsMember({"none", "median_scale_shift"}));
    app.add_option("--noise-ckpt", cfg->noise_checkpoint_override);
    app.add_option("--seed", cfg->seed);
    app.add_flag("--export", cfg->export_maps);
    app.callback([cfg, alignment] {
        cfg->alignment = *alignment == "none" ? dadp::AlignmentMode::none
                                              : dadp::AlignmentMode::median_scale_shift;
        const auto r = dadp::evaluate_depth(*cfg);
        std::cout << dadp::metrics_table(r.merged);
        json out{{"metrics", json::parse(dadp::metrics_to_json(r.merged))},
                 {"abnormal_pixels", r.abnormal_pixels},
                 {"objects_evaluated", r.objects_evaluated}};
        std::cout << out.dump() << "\n";
        if (!cfg->out_dir.empty()) {
            fs::create_directories(cfg->out_dir);
            std::ofstream f(cfg->out_dir + "/metrics.json");
            f << out.dump(2) << "\n";
            write_effective_config(cfg->out_dir, {{"alignment", *alignment},
                                                  {"seed", cfg->seed},
                                                  {"ckpt", cfg->depth_checkpoint},
                                                  {"dataset", cfg->dataset_dir}});
        }
    });
    return 0;
}

int cmd_viz_features(CLI::App& app, const json& cfg0) {
    auto noise_ckpt = std::make_shared<std::string>();
    auto image_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>("viz");
    auto taps_json = std::make_shared<std::string>();
    auto k = std::make_shared<int>(5);
    auto seed = std::make_shared<uint64_t>(0);
    from_cfg(cfg0, "k", *k);
    from_cfg(cfg0, "seed", *seed);
    from_cfg(cfg0, "taps", *taps_json);
    app.add_option("--noise-ckpt", *noise_ckpt)->required();
    app.add_option("--image", *image_path)->required();
    app.add_option("--out", *out_dir);
    app.add_option("--taps", *taps_json);
    app.add_option("--k", *k);
    app.add_option("--seed", *seed);
    app.callback([=] {
        dadp::Image img = dadp::load_image_png(*image_path);
        std::vector<dadp::FeatureTap> taps;
        if (!taps_json->empty()) {
            taps = dadp::taps_from_json(*taps_json);
        } else {
            dadp::CheckpointHeader h = dadp::read_checkpoint_header(*noise_ckpt);
            dadp::NoisePredictor net(
                dadp::noise_config_from_json(h.config.at("net")));
            taps = dadp::default_feature_taps(*net);
        }
        const auto stats = dadp::viz_features(*noise_ckpt, img, taps, *k, *seed, *out_dir);
        json j = json::array();
        for (const auto& s : stats)
            j.push_back({{"t", s.tap.step},
                         {"b", s.tap.block},
                         {"scale", s.tap.scale_div},
                         {"mean_component_area", s.mean_component_area},
                         {"png", s.png_path}});
        std::ofstream f(*out_dir + "/component_stats.json");
        f << j.dump(2) << "\n";
        std::cout << j.dump() << "\n";
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        torch::set_num_threads(1);  // reproducible batched math
        const json cfg0 = load_config_arg(argc, argv);

        CLI::App app{"diffusion-augmented depth prediction toolkit"};
        app.require_subcommand(1);
        auto config_path = std::make_shared<std::string>();
        app.add_option("--config", *config_path, "JSON config merged under the flags");

        // --config was already consumed by the pre-scan; each verb accepts the
        // flag so it can appear after the subcommand name too.
        auto sub = [&](const char* name, const char* desc) -> CLI::App& {
            CLI::App* s = app.add_subcommand(name, desc);
            s->add_option("--config", *config_path, "JSON config merged under the flags");
            return *s;
        };
        cmd_synth_data(sub("synth-data", "generate a synthetic dataset"), cfg0);
        cmd_sparsify(sub("sparsify", "thin ground-truth annotations"), cfg0);
        cmd_train_noise(sub("train-noise", "stage 1: train the noise predictor"), cfg0);
        cmd_train_depth(sub("train-depth", "stage 2: train the depth predictor"), cfg0);
        cmd_eval(sub("eval", "evaluate a depth checkpoint"), cfg0);
        cmd_viz_features(sub("viz-features", "cluster tapped feature maps"), cfg0);

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            app.exit(e);
            return 0;
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }
        return 0;
    } catch (const dadp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dadp::IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return 4;
    } catch (const dadp::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const dadp::FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const dadp::ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
