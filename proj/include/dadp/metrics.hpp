#pragma once

#include <string>
#include <vector>

#include "dadp/grid.hpp"

namespace dadp {

enum class AlignmentMode { none, median_scale_shift };

struct MetricsReport {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    size_t valid_pixels = 0;
    size_t excluded_nonpositive = 0;
    AlignmentMode alignment = AlignmentMode::none;
};

/// Appendix-style depth metrics over gt-valid pixels with positive ground
/// truth. With median_scale_shift the prediction is affine-aligned to the
/// ground truth (median shift, MAD scale) and clamped to a small positive
/// floor before evaluation.
MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, AlignmentMode mode);

/// Accumulate over several images by weighting per-image reports with M.
MetricsReport merge_reports(const std::vector<MetricsReport>& reports);

std::string metrics_to_json(const MetricsReport& r);
std::string metrics_table(const MetricsReport& r);

}  // namespace dadp
