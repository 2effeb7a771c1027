#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dadp/grid.hpp"

namespace dadp {

/// Per-image object masks with their occlusion-exclusion masks.
struct ObjectMaskSet {
    int h = 0;
    int w = 0;
    int K = 0;
    std::vector<std::vector<uint8_t>> masks;      // K boolean maps, h*w each
    std::vector<std::vector<uint8_t>> occlusion;  // subset of the matching mask
    std::vector<size_t> pixel_counts;
    int dropped_small = 0;    // objects below the size threshold
    int occlusion_skips = 0;  // objects too small for k-means
};

/// Reads a 16-bit PNG index map: 0 = background, i > 0 = object i.
ObjectMaskSet load_object_masks(const std::string& path, size_t min_object_pixels = 1);

ObjectMaskSet object_masks_from_index_map(const std::vector<uint16_t>& index_map, int h, int w,
                                          size_t min_object_pixels = 1);

/// K-means (seeded farthest-point init, Lloyd iterations) over the object's RGB
/// pixels; flags pixels whose cosine similarity to their assigned center falls
/// strictly below the `fraction` quantile of the object's similarities.
std::vector<uint8_t> occlusion_mask(const Image& x0, const std::vector<uint8_t>& object_mask,
                                    int k, double fraction, uint64_t seed);

/// Fills `occlusion` for every object; objects smaller than k get an empty mask
/// and bump occlusion_skips.
void compute_occlusions(ObjectMaskSet& set, const Image& x0, int k, double fraction,
                        uint64_t seed);

/// Debug overlay: object tint plus occlusion highlight, written as 8-bit PNG.
void save_mask_debug_png(const ObjectMaskSet& set, const Image& x0, const std::string& path);

}  // namespace dadp
