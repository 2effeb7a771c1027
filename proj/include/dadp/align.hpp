#pragma once

#include <vector>

#include "dadp/grid.hpp"

namespace dadp {

/// Depth normalized to zero median shift and unit mean-absolute-deviation scale.
/// Statistics come from stats_mask pixels only; the transform covers all pixels.
struct AlignedDepth {
    int h = 0;
    int w = 0;
    std::vector<double> values;
    double shift = 0.0;
    double scale = 0.0;       // raw MAD before the guard
    bool degenerate = false;  // scale fell below the epsilon guard
    std::vector<uint8_t> stats_mask;
    size_t stats_count = 0;
};

/// Median of the masked pixels (average of the two middle elements for even
/// counts) and MAD about it; requires >= 2 masked pixels.
/// guard_rel scales with the masked value range to form the epsilon guard.
AlignedDepth align_scale_shift(const DepthMap& d, const std::vector<uint8_t>& stats_mask,
                               double guard_rel = 1e-6);

namespace detail {
/// Median over masked entries; optionally reports the contributing flat
/// indices (one for odd counts, the two middle elements for even counts).
double masked_median(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                     std::vector<size_t>* median_indices);
}  // namespace detail

}  // namespace dadp
