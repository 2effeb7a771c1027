#include "dadp/masks.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

#include "dadp/cluster.hpp"

namespace dadp {

ObjectMaskSet object_masks_from_index_map(const std::vector<uint16_t>& index_map, int h, int w,
                                          size_t min_object_pixels) {
    if (index_map.size() != size_t(h) * w)
        throw ShapeError("object_masks_from_index_map: index map size mismatch");
    uint16_t max_idx = 0;
    for (uint16_t v : index_map) max_idx = std::max(max_idx, v);

    ObjectMaskSet set;
    set.h = h;
    set.w = w;
    for (uint16_t idx = 1; idx <= max_idx; ++idx) {
        std::vector<uint8_t> mask(index_map.size(), 0);
        size_t count = 0;
        for (size_t p = 0; p < index_map.size(); ++p) {
            if (index_map[p] == idx) {
                mask[p] = 1;
                ++count;
            }
        }
        if (count == 0) continue;
        if (count < min_object_pixels) {
            ++set.dropped_small;
            continue;
        }
        set.masks.push_back(std::move(mask));
        set.occlusion.emplace_back();
        set.pixel_counts.push_back(count);
    }
    set.K = int(set.masks.size());
    return set;
}

ObjectMaskSet load_object_masks(const std::string& path, size_t min_object_pixels) {
    cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (img.empty()) throw FormatError("load_object_masks: cannot read " + path);
    if (img.type() != CV_16UC1)
        throw FormatError("load_object_masks: expected single-channel 16-bit PNG, got type " +
                          std::to_string(img.type()) + " in " + path);
    std::vector<uint16_t> index_map(size_t(img.rows) * img.cols);
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x)
            index_map[size_t(y) * img.cols + x] = img.at<uint16_t>(y, x);
    return object_masks_from_index_map(index_map, img.rows, img.cols, min_object_pixels);
}

std::vector<uint8_t> occlusion_mask(const Image& x0, const std::vector<uint8_t>& object_mask,
                                    int k, double fraction, uint64_t seed) {
    if (object_mask.size() != x0.pixels())
        throw ShapeError("occlusion_mask: mask/image size mismatch");
    std::vector<size_t> idx;
    for (size_t p = 0; p < object_mask.size(); ++p)
        if (object_mask[p]) idx.push_back(p);
    const int n = int(idx.size());
    std::vector<uint8_t> out(object_mask.size(), 0);
    if (n < k || n == 0) return out;  // too small to cluster

    std::vector<double> points(size_t(n) * x0.c);
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < x0.c; ++ch)
            points[size_t(i) * x0.c + ch] = x0.data[idx[i] * x0.c + ch];

    const KMeansResult km = kmeans(points, n, x0.c, k, seed);

    std::vector<double> sims(n);
    for (int i = 0; i < n; ++i)
        sims[i] = cosine_similarity(&points[size_t(i) * x0.c],
                                    &km.centers[size_t(km.labels[i]) * x0.c], x0.c);

    // Threshold at the fraction-quantile; only strictly lower similarities are
    // flagged, so uniform objects keep all their pixels.
    std::vector<double> sorted = sims;
    std::sort(sorted.begin(), sorted.end());
    const size_t q = std::min(size_t(n) - 1, size_t(std::floor(fraction * n)));
    const double threshold = sorted[q];
    for (int i = 0; i < n; ++i)
        if (sims[i] < threshold) out[idx[i]] = 1;
    return out;
}

void compute_occlusions(ObjectMaskSet& set, const Image& x0, int k, double fraction,
                        uint64_t seed) {
    if (set.h != x0.h || set.w != x0.w)
        throw ShapeError("compute_occlusions: image/mask shape mismatch");
    set.occlusion.resize(set.K);
    set.occlusion_skips = 0;
    for (int i = 0; i < set.K; ++i) {
        if (set.pixel_counts[i] < size_t(k)) {
            set.occlusion[i].clear();
            ++set.occlusion_skips;
            continue;
        }
        // Per-object sub-seed keeps objects independent and runs reproducible.
        set.occlusion[i] = occlusion_mask(x0, set.masks[i], k, fraction, seed * 1000003u + i);
    }
}

void save_mask_debug_png(const ObjectMaskSet& set, const Image& x0, const std::string& path) {
    cv::Mat img(set.h, set.w, CV_8UC3);
    for (int y = 0; y < set.h; ++y)
        for (int x = 0; x < set.w; ++x) {
            auto& px = img.at<cv::Vec3b>(y, x);
            for (int ch = 0; ch < 3; ++ch) {
                const float v = x0.c == 3 ? x0.at(y, x, ch) : 0.f;
                px[2 - ch] = uint8_t(std::clamp((v + 1.f) * 127.5f, 0.f, 255.f));
            }
        }
    for (int i = 0; i < set.K; ++i) {
        const int tint = 40 + (i * 53) % 160;
        for (size_t p = 0; p < set.masks[i].size(); ++p) {
            if (!set.masks[i][p]) continue;
            auto& px = img.at<cv::Vec3b>(int(p) / set.w, int(p) % set.w);
            const bool occ = !set.occlusion.empty() && !set.occlusion[i].empty() &&
                             set.occlusion[i][p];
            if (occ) {
                px = cv::Vec3b(255, 64, 64);  // occlusion-excluded: blue-ish
            } else {
                px[1] = uint8_t(std::min(255, px[1] / 2 + tint));
            }
        }
    }
    if (!cv::imwrite(path, img))
        throw DataError("save_mask_debug_png: cannot write " + path);
}

}  // namespace dadp
