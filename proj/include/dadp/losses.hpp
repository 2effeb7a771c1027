#pragma once

#include <optional>
#include <vector>

#include "dadp/align.hpp"
#include "dadp/grid.hpp"
#include "dadp/masks.hpp"

namespace dadp {

struct LossConfig {
    double alpha = 0.1;               // tolerance factor widening the object band
    double lambda = 0.1;              // weight of the integrality term
    int kmeans_k = 5;
    double occlusion_fraction = 0.20;
    double scale_guard_rel = 1e-6;
};

struct ObjectBounds {
    double upper = 0.0;
    double lower = 0.0;
    enum class Source { gt_and_median, median_only } source = Source::median_only;
    bool swapped = false;  // raw formulas produced lower > upper (negative medians)
};

/// U = (1+a) * max(max(gt), median(pred)), L = (1-a) * min(min(gt), median(pred));
/// median-only variants when gt is empty. Enforces lower <= upper by swapping.
ObjectBounds object_bounds(const std::vector<double>& pred_in_object,
                           const std::vector<double>& gt_in_object, double alpha);

/// ((d > U) or (d < L)) minus the occlusion mask, over the object's pixel list.
std::vector<uint8_t> abnormal_region(const std::vector<double>& pred_in_object,
                                     const ObjectBounds& bounds,
                                     const std::vector<uint8_t>& occlusion_in_object);

struct LossBreakdown {
    double total = 0.0;
    double affinity = 0.0;
    double integrality = 0.0;
    size_t valid_pixels = 0;      // M in the affinity term
    size_t abnormal_pixels = 0;   // summed over objects
    int bound_swaps = 0;
    bool pred_degenerate = false;
    bool gt_degenerate = false;
};

/// Affinity-invariant loss: both operands aligned (prediction statistics over
/// gt-valid pixels so the two share a support), then (1/2M) * sum |dhat - dhat*|.
double affinity_loss(const DepthMap& pred, const DepthMap& gt,
                     const LossConfig& cfg = LossConfig{});

/// Integrality loss over already-aligned depths; bounds are constants.
/// K counts all objects, clean ones contribute zero; K = 0 gives zero.
double integrality_loss(const AlignedDepth& pred_aligned, const ObjectMaskSet& objects,
                        const AlignedDepth& gt_aligned, const DepthMap& gt_validity,
                        const LossConfig& cfg, size_t* abnormal_count = nullptr,
                        int* swap_count = nullptr);

struct TotalLossResult {
    LossBreakdown breakdown;
    // Gradients w.r.t. the raw prediction, including the alignment chain;
    // bounds and mask memberships are treated as constants. Empty unless requested.
    std::vector<double> grad_affinity;
    std::vector<double> grad_integrality;
};

/// L = L_af + lambda * L_obj with a single per-image alignment of the
/// prediction (statistics over gt-valid pixels) shared by both terms.
TotalLossResult total_loss(const DepthMap& pred, const DepthMap& gt,
                           const ObjectMaskSet& objects, const LossConfig& cfg,
                           bool with_grad = false);

}  // namespace dadp
