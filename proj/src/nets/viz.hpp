#pragma once

#include <string>
#include <vector>

#include "dadp/grid.hpp"
#include "nets/train.hpp"

namespace dadp {

struct TapVizStats {
    FeatureTap tap;
    double mean_component_area = 0.0;
    int map_h = 0;
    int map_w = 0;
    std::string png_path;
};

/// Clusters each tap's feature map with k-means (over per-pixel feature
/// vectors), writes an indexed-color PNG per tap, and reports the mean
/// 4-connected component area of the cluster map.
std::vector<TapVizStats> viz_features(const std::string& noise_checkpoint, const Image& image,
                                      const std::vector<FeatureTap>& taps, int k, uint64_t seed,
                                      const std::string& out_dir);

}  // namespace dadp
