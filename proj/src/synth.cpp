#include "dadp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dadp/pfm.hpp"

namespace dadp {

namespace {

constexpr double kDepthNear = 3.0;
constexpr double kDepthFar = 13.0;

struct Rgb {
    float r, g, b;
};

Rgb random_color(std::mt19937_64& rng) {
    std::uniform_real_distribution<float> hue(0.f, 6.f);
    std::uniform_real_distribution<float> sat(0.55f, 1.f);
    std::uniform_real_distribution<float> val(0.45f, 0.95f);
    const float h = hue(rng), s = sat(rng), v = val(rng);
    const float c = v * s, x = c * (1.f - std::abs(std::fmod(h, 2.f) - 1.f)), m = v - c;
    float r = 0, g = 0, b = 0;
    switch (int(h)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    return {r + m, g + m, b + m};
}

double ground_depth(int y, int h) {
    return kDepthFar - (kDepthFar - kDepthNear) * double(y) / double(h - 1);
}

enum class Shape { box, ellipse, triangle };

struct Solid {
    Shape shape;
    int cx, base_y, half_w, height;
    double base_depth;
    double slant_x, slant_y, bulge;
    Rgb color;
    float noise_amp;
    bool contaminated;
    int patch_x0, patch_y0, patch_w, patch_h;
    Rgb patch_color;
};

// Coverage and local depth of a solid at a pixel; returns false outside.
bool solid_sample(const Solid& s, int x, int y, double* depth) {
    const int top = s.base_y - s.height;
    if (y > s.base_y || y < top) return false;
    const double u = double(x - s.cx) / double(s.half_w);       // [-1,1] across
    const double v = double(s.base_y - y) / double(s.height);   // 0 bottom .. 1 top
    bool inside = false;
    double d = s.base_depth + s.slant_x * u + s.slant_y * (v - 0.5);
    switch (s.shape) {
        case Shape::box:
            inside = std::abs(u) <= 1.0;
            break;
        case Shape::ellipse: {
            const double r2 = u * u + (2.0 * v - 1.0) * (2.0 * v - 1.0);
            inside = r2 <= 1.0;
            if (inside) d -= s.bulge * std::sqrt(1.0 - r2);
            break;
        }
        case Shape::triangle:
            inside = std::abs(u) <= 1.0 - v;
            break;
    }
    if (inside) *depth = d;
    return inside;
}

Scene try_scene(uint64_t seed, int size) {
    const int h = size, w = size;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Scene scene;
    scene.seed = seed;
    scene.image = Image(h, w, 3);
    scene.depth = DepthMap(h, w);

    // Ground plane: one of several texture families plus noise, modulated by a
    // scene-wide illumination ramp; depth recedes upward regardless of looks.
    const Rgb ground_a = {0.25f + float(uni(rng)) * 0.2f, 0.28f + float(uni(rng)) * 0.2f,
                          0.2f + float(uni(rng)) * 0.18f};
    const float stripe_gain = 0.05f + 0.1f * float(uni(rng));
    const int stripe_period = 4 + int(uni(rng) * 7);
    const int tex_family = int(uni(rng) * 4.0) % 4;
    const double ramp_theta = uni(rng) * 2.0 * 3.14159265358979;
    const float ramp_amp = 0.1f + 0.35f * float(uni(rng));
    const float ramp_cx = float(std::cos(ramp_theta)), ramp_cy = float(std::sin(ramp_theta));
    auto illum = [&](int x, int y) {
        const float u = (float(x) / float(w - 1) - 0.5f) * ramp_cx +
                        (float(y) / float(h - 1) - 0.5f) * ramp_cy;
        return 1.f + ramp_amp * u;
    };
    auto ground_tex = [&](int x, int y) {
        switch (tex_family) {
            case 0: return float((y / stripe_period + x / (stripe_period * 2)) % 2);
            case 1: return float((x / stripe_period) % 2);
            case 2: return float(((x + y) / stripe_period) % 2);
            default:
                return 0.5f + 0.5f * std::sin(float(x) * 6.28f / float(stripe_period * 3)) *
                                  std::sin(float(y) * 6.28f / float(stripe_period * 2));
        }
    };
    std::vector<double> zbuf(size_t(h) * w);
    std::vector<int> owner(size_t(h) * w, 0);
    std::normal_distribution<float> tex_noise(0.f, 0.04f + 0.05f * float(uni(rng)));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d = ground_depth(y, h);
            zbuf[size_t(y) * w + x] = d;
            scene.depth.at(y, x) = d;
            const float stripe = ground_tex(x, y);
            const float g = illum(x, y);
            scene.image.at(y, x, 0) = (ground_a.r + stripe * stripe_gain) * g + tex_noise(rng);
            scene.image.at(y, x, 1) = (ground_a.g + stripe * stripe_gain) * g + tex_noise(rng);
            scene.image.at(y, x, 2) = (ground_a.b + stripe * stripe_gain) * g + tex_noise(rng);
        }

    const int n_solids = 3 + int(uni(rng) * 6.0);  // 3..8 attempts
    std::vector<Solid> solids(n_solids);
    for (auto& s : solids) {
        s.shape = Shape(int(uni(rng) * 3.0) % 3);
        s.base_y = int(h * (0.40 + 0.55 * uni(rng)));
        s.base_depth = ground_depth(s.base_y, h);
        // Apparent size shrinks with distance.
        const double scale = 2.2 / s.base_depth;
        s.height = std::clamp(int(h * scale * (0.6 + 0.7 * uni(rng))), 6, h / 2);
        s.half_w = std::clamp(int(s.height * (0.35 + 0.5 * uni(rng))), 3, w / 3);
        s.cx = int(w * (0.08 + 0.84 * uni(rng)));
        s.slant_x = (uni(rng) - 0.5) * 1.0;
        s.slant_y = (uni(rng) - 0.5) * 1.0;
        s.bulge = 0.3 + 0.5 * uni(rng);
        s.color = random_color(rng);
        // Some solids echo the ground color; their outline then rests on faint
        // texture breaks rather than a color edge.
        if (uni(rng) < 0.3) {
            const float dv = 0.06f * float(uni(rng) * 2.0 - 1.0);
            s.color = {ground_a.r + stripe_gain * 0.5f + dv, ground_a.g + stripe_gain * 0.5f + dv,
                       ground_a.b + stripe_gain * 0.5f + dv};
        }
        s.noise_amp = 0.06f + 0.08f * float(uni(rng));
        s.contaminated = uni(rng) < 0.5;
        s.patch_w = std::max(2, int(s.half_w * 0.6));
        s.patch_h = std::max(2, int(s.height * 0.25));
        s.patch_x0 = s.cx - s.half_w + int(uni(rng) * s.half_w);
        s.patch_y0 = s.base_y - s.height + int(uni(rng) * (s.height / 2));
        s.patch_color = random_color(rng);
    }

    // Painter with a z-buffer; the visible-surface owner yields exact masks.
    std::normal_distribution<float> obj_noise(0.f, 1.f);
    for (int i = 0; i < n_solids; ++i) {
        const Solid& s = solids[i];
        for (int y = std::max(0, s.base_y - s.height); y <= std::min(h - 1, s.base_y); ++y)
            for (int x = std::max(0, s.cx - s.half_w - 1); x <= std::min(w - 1, s.cx + s.half_w);
                 ++x) {
                double d;
                if (!solid_sample(s, x, y, &d)) continue;
                const size_t p = size_t(y) * w + x;
                if (d >= zbuf[p]) continue;
                zbuf[p] = d;
                owner[p] = i + 1;
                scene.depth.at(y, x) = d;
                Rgb c = s.color;
                if (s.contaminated && x >= s.patch_x0 && x < s.patch_x0 + s.patch_w &&
                    y >= s.patch_y0 && y < s.patch_y0 + s.patch_h)
                    c = s.patch_color;
                const float g = illum(x, y);
                scene.image.at(y, x, 0) = c.r * g + s.noise_amp * obj_noise(rng);
                scene.image.at(y, x, 1) = c.g * g + s.noise_amp * obj_noise(rng);
                scene.image.at(y, x, 2) = c.b * g + s.noise_amp * obj_noise(rng);
            }
    }

    for (auto& v : scene.image.data) v = std::clamp(v * 2.f - 1.f, -1.f, 1.f);

    // Renumber visible objects, dropping slivers.
    std::vector<uint16_t> index_map(owner.size(), 0);
    std::vector<size_t> counts(n_solids + 1, 0);
    for (int o : owner) ++counts[o];
    std::vector<uint16_t> remap(n_solids + 1, 0);
    uint16_t next = 1;
    for (int i = 1; i <= n_solids; ++i)
        if (counts[i] >= 16) remap[i] = next++;
    for (size_t p = 0; p < owner.size(); ++p) index_map[p] = remap[owner[p]];
    scene.objects = object_masks_from_index_map(index_map, h, w, 16);
    return scene;
}

}  // namespace

Scene synth_scene(uint64_t seed, int size) {
    if (size < 16 || size % 16 != 0)
        throw ConfigError("synth_scene: size must be a positive multiple of 16");
    // Occlusion can swallow solids; re-roll from a derived seed until the
    // visible object count lands in [3, 8].
    for (int attempt = 0; attempt < 64; ++attempt) {
        Scene s = try_scene(seed + uint64_t(attempt) * 0x9e3779b97f4a7c15ull, size);
        if (s.objects.K >= 3 && s.objects.K <= 8) {
            s.seed = seed;
            return s;
        }
    }
    throw DataError("synth_scene: could not place 3-8 visible objects");
}

SparsifyPattern sparsify_pattern_from_string(const std::string& s) {
    if (s == "uniform") return SparsifyPattern::uniform;
    if (s == "scanline") return SparsifyPattern::scanline;
    throw ConfigError("unknown sparsify pattern: " + s);
}

DepthMap sparsify(const DepthMap& gt, double target_density, SparsifyPattern pattern,
                  uint64_t seed) {
    if (!(target_density > 0.0) || target_density > 1.0 + 1e-12)
        throw ConfigError("sparsify: target density " + std::to_string(target_density) +
                          " outside (0, 1]");
    std::vector<size_t> valid_idx;
    for (size_t p = 0; p < gt.size(); ++p)
        if (gt.valid[p]) valid_idx.push_back(p);
    const size_t keep = std::max<size_t>(1, size_t(std::llround(target_density * gt.size())));
    if (keep >= valid_idx.size()) return gt;  // identity at (or above) current density

    std::mt19937_64 rng(seed);
    std::vector<size_t> pool;
    if (pattern == SparsifyPattern::uniform) {
        pool = valid_idx;
    } else {
        // LiDAR-style stripes: Poisson-spaced rows, subsampled within rows.
        const int rows_wanted =
            std::clamp(int(std::ceil(1.5 * double(keep) / double(gt.w))), 1, gt.h);
        std::vector<uint8_t> row_on(gt.h, 0);
        std::exponential_distribution<double> gap(double(rows_wanted) / double(gt.h));
        double y = gap(rng) * 0.5;
        int n_rows = 0;
        while (y < gt.h) {
            if (!row_on[int(y)]) {
                row_on[int(y)] = 1;
                ++n_rows;
            }
            y += std::max(1.0, gap(rng));
        }
        auto collect = [&] {
            pool.clear();
            for (size_t p : valid_idx)
                if (row_on[p / gt.w]) pool.push_back(p);
        };
        collect();
        std::uniform_int_distribution<int> extra_row(0, gt.h - 1);
        while (pool.size() < keep) {  // thin inputs may need extra stripes
            row_on[extra_row(rng)] = 1;
            collect();
        }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(keep);

    DepthMap out = gt;
    std::fill(out.valid.begin(), out.valid.end(), 0);
    for (size_t p : pool) out.valid[p] = 1;
    return out;
}

void save_image_png(const Image& img, const std::string& path) {
    if (img.c != 3) throw DataError("save_image_png: expected 3 channels");
    cv::Mat m(img.h, img.w, CV_8UC3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            auto& px = m.at<cv::Vec3b>(y, x);
            for (int ch = 0; ch < 3; ++ch)
                px[2 - ch] =
                    uint8_t(std::clamp((img.at(y, x, ch) + 1.f) * 127.5f + 0.5f, 0.f, 255.f));
        }
    if (!cv::imwrite(path, m)) throw DataError("save_image_png: cannot write " + path);
}

Image load_image_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) throw FormatError("load_image_png: cannot read " + path);
    Image img(m.rows, m.cols, 3);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const auto& px = m.at<cv::Vec3b>(y, x);
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = float(px[2 - ch]) / 127.5f - 1.f;
        }
    return img;
}

void save_depth_viz_png(const DepthMap& depth, const std::string& path) {
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (size_t p = 0; p < depth.size(); ++p) {
        if (!depth.valid[p]) continue;
        if (first) {
            lo = hi = depth.values[p];
            first = false;
        } else {
            lo = std::min(lo, depth.values[p]);
            hi = std::max(hi, depth.values[p]);
        }
    }
    const double span = std::max(hi - lo, 1e-12);
    cv::Mat gray(depth.h, depth.w, CV_8UC1, cv::Scalar(0));
    for (int y = 0; y < depth.h; ++y)
        for (int x = 0; x < depth.w; ++x)
            if (depth.is_valid(y, x))
                gray.at<uint8_t>(y, x) = uint8_t(255.0 * (depth.at(y, x) - lo) / span);
    cv::Mat color;
    cv::applyColorMap(gray, color, cv::COLORMAP_TURBO);
    for (int y = 0; y < depth.h; ++y)
        for (int x = 0; x < depth.w; ++x)
            if (!depth.is_valid(y, x)) color.at<cv::Vec3b>(y, x) = cv::Vec3b(0, 0, 0);
    if (!cv::imwrite(path, color)) throw DataError("save_depth_viz_png: cannot write " + path);
}

void write_scene(const Scene& scene, const std::string& dir, const std::string& id) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_image_png(scene.image, dir + "/" + id + ".png");
    save_depth_pfm(scene.depth, dir + "/" + id + ".depth.pfm");
    cv::Mat idx(scene.objects.h, scene.objects.w, CV_16UC1, cv::Scalar(0));
    for (int i = 0; i < scene.objects.K; ++i)
        for (size_t p = 0; p < scene.objects.masks[i].size(); ++p)
            if (scene.objects.masks[i][p])
                idx.at<uint16_t>(int(p) / scene.objects.w, int(p) % scene.objects.w) =
                    uint16_t(i + 1);
    if (!cv::imwrite(dir + "/" + id + ".masks.png", idx))
        throw DataError("write_scene: cannot write masks for " + id);
}

Scene load_scene(const std::string& dir, const std::string& id) {
    Scene s;
    s.image = load_image_png(dir + "/" + id + ".png");
    s.depth = load_depth_pfm(dir + "/" + id + ".depth.pfm");
    s.objects = load_object_masks(dir + "/" + id + ".masks.png");
    return s;
}

void write_manifest(const DatasetManifest& m, const std::string& dir) {
    nlohmann::json j{{"ids", m.ids}, {"densities", m.densities}};
    std::ofstream f(dir + "/manifest.json");
    if (!f) throw DataError("write_manifest: cannot write " + dir + "/manifest.json");
    f << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw DataError("load_manifest: cannot read " + dir + "/manifest.json");
    nlohmann::json j = nlohmann::json::parse(f);
    DatasetManifest m;
    m.ids = j.at("ids").get<std::vector<std::string>>();
    m.densities = j.at("densities").get<std::vector<double>>();
    return m;
}

}  // namespace dadp
