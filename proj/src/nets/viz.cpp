#include "nets/viz.hpp"

#include <filesystem>

#include <opencv2/imgcodecs.hpp>

#include "dadp/cluster.hpp"
#include "nets/checkpoint.hpp"
#include "nets/convert.hpp"
#include "nets/features.hpp"

namespace dadp {

namespace {
const uint8_t kPalette[10][3] = {{230, 25, 75},  {60, 180, 75},   {255, 225, 25},
                                 {0, 130, 200},  {245, 130, 48},  {145, 30, 180},
                                 {70, 240, 240}, {240, 50, 230},  {210, 245, 60},
                                 {128, 128, 128}};
}

std::vector<TapVizStats> viz_features(const std::string& noise_checkpoint, const Image& image,
                                      const std::vector<FeatureTap>& taps, int k, uint64_t seed,
                                      const std::string& out_dir) {
    CheckpointHeader h = read_checkpoint_header(noise_checkpoint);
    NoisePredictor net(noise_config_from_json(h.config.at("net")));
    load_checkpoint(noise_checkpoint, "noise_predictor", *net);
    net->eval();
    for (auto& p : net->parameters()) p.set_requires_grad(false);
    const auto sj = h.config.at("sched");
    const NoiseSchedule sched = build_schedule(sj.at("T").get<int>(),
                                               sj.at("beta_start").get<double>(),
                                               sj.at("beta_end").get<double>());

    std::filesystem::create_directories(out_dir);
    auto x0 = image_to_tensor(image);

    std::vector<TapVizStats> out;
    for (const auto& tap : taps) {
        auto gen = at::detail::createCPUGenerator();
        gen.set_current_seed(seed * 2654435761ull + uint64_t(tap.step) * 97 + tap.block);
        FeatureBundle bundle = extract_structure_features(net, x0, {tap}, sched, gen);
        auto feat = bundle.at(tap.scale_div).squeeze(0).to(torch::kFloat64).contiguous();
        const int c = int(feat.size(0)), fh = int(feat.size(1)), fw = int(feat.size(2));
        const int n = fh * fw;
        std::vector<double> points(size_t(n) * c);
        const double* fdata = feat.data_ptr<double>();
        for (int p = 0; p < n; ++p)
            for (int ch = 0; ch < c; ++ch)
                points[size_t(p) * c + ch] = fdata[size_t(ch) * n + p];

        const int kk = std::min(k, n);
        const KMeansResult km = kmeans(points, n, c, kk, seed * 7 + tap.block);

        cv::Mat img(fh, fw, CV_8UC3);
        for (int p = 0; p < n; ++p) {
            const auto* rgb = kPalette[km.labels[p] % 10];
            img.at<cv::Vec3b>(p / fw, p % fw) = cv::Vec3b(rgb[2], rgb[1], rgb[0]);
        }
        TapVizStats stats;
        stats.tap = tap;
        stats.map_h = fh;
        stats.map_w = fw;
        stats.mean_component_area = mean_component_area(km.labels, fh, fw);
        stats.png_path = out_dir + "/tap_t" + std::to_string(tap.step) + "_b" +
                         std::to_string(tap.block) + ".png";
        if (!cv::imwrite(stats.png_path, img))
            throw DataError("viz_features: cannot write " + stats.png_path);
        out.push_back(stats);
    }
    return out;
}

}  // namespace dadp
