#include "dadp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dadp/align.hpp"

namespace dadp {

namespace {

// Affine-align pred onto gt over the usable pixels (median shift, MAD scale),
// then clamp to a small positive floor.
void median_align_to_gt(DepthMap& pred, const DepthMap& gt,
                        const std::vector<uint8_t>& usable) {
    AlignedDepth pa = align_scale_shift(pred, usable);
    AlignedDepth ga = align_scale_shift(gt, usable);
    const double gt_scale = std::max(ga.scale, 1.0e-12);
    double gt_median = ga.shift;
    const double floor = 1.0e-3 * gt_median;
    for (size_t i = 0; i < pred.size(); ++i) {
        double v = pa.values[i] * gt_scale + gt_median;
        pred.values[i] = std::max(v, floor);
    }
}

}  // namespace

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, AlignmentMode mode) {
    require_same_shape(pred, gt, "compute_metrics");
    MetricsReport r;
    r.alignment = mode;

    std::vector<uint8_t> usable(gt.size(), 0);
    size_t m = 0, excluded = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (!gt.valid[i]) continue;
        if (gt.values[i] > 0.0) {
            usable[i] = 1;
            ++m;
        } else {
            ++excluded;
        }
    }
    r.excluded_nonpositive = excluded;
    if (m == 0) throw DataError("compute_metrics: no valid positive ground-truth pixels");
    r.valid_pixels = m;

    DepthMap p = pred;
    if (mode == AlignmentMode::median_scale_shift) median_align_to_gt(p, gt, usable);

    const long n = long(gt.size());
    double abs_rel = 0.0, sq_rel = 0.0, mse = 0.0;
    long d1 = 0, d2 = 0, d3 = 0;
#pragma omp parallel for schedule(static) \
    reduction(+ : abs_rel, sq_rel, mse, d1, d2, d3)
    for (long i = 0; i < n; ++i) {
        if (!usable[i]) continue;
        const double d = p.values[i];
        const double ds = gt.values[i];
        const double diff = d - ds;
        abs_rel += std::abs(diff) / ds;
        sq_rel += diff * diff / ds;
        mse += diff * diff;
        const double ratio = std::max(d / ds, ds / d);
        d1 += ratio < 1.25;
        d2 += ratio < 1.25 * 1.25;
        d3 += ratio < 1.25 * 1.25 * 1.25;
    }
    const double inv_m = 1.0 / double(m);
    r.abs_rel = abs_rel * inv_m;
    r.sq_rel = sq_rel * inv_m;
    r.rmse = std::sqrt(mse * inv_m);
    r.delta1 = double(d1) * inv_m;
    r.delta2 = double(d2) * inv_m;
    r.delta3 = double(d3) * inv_m;
    return r;
}

MetricsReport merge_reports(const std::vector<MetricsReport>& reports) {
    MetricsReport out;
    double abs_rel = 0, sq_rel = 0, mse = 0, d1 = 0, d2 = 0, d3 = 0;
    size_t m = 0;
    for (const auto& r : reports) {
        const double w = double(r.valid_pixels);
        abs_rel += r.abs_rel * w;
        sq_rel += r.sq_rel * w;
        mse += r.rmse * r.rmse * w;
        d1 += r.delta1 * w;
        d2 += r.delta2 * w;
        d3 += r.delta3 * w;
        m += r.valid_pixels;
        out.excluded_nonpositive += r.excluded_nonpositive;
        out.alignment = r.alignment;
    }
    if (m == 0) throw DataError("merge_reports: nothing to merge");
    const double inv = 1.0 / double(m);
    out.abs_rel = abs_rel * inv;
    out.sq_rel = sq_rel * inv;
    out.rmse = std::sqrt(mse * inv);
    out.delta1 = d1 * inv;
    out.delta2 = d2 * inv;
    out.delta3 = d3 * inv;
    out.valid_pixels = m;
    return out;
}

std::string metrics_to_json(const MetricsReport& r) {
    nlohmann::json j{
        {"abs_rel", r.abs_rel},
        {"sq_rel", r.sq_rel},
        {"rmse", r.rmse},
        {"delta1", r.delta1},
        {"delta2", r.delta2},
        {"delta3", r.delta3},
        {"valid_pixels", r.valid_pixels},
        {"excluded_nonpositive", r.excluded_nonpositive},
        {"alignment", r.alignment == AlignmentMode::none ? "none" : "median_scale_shift"}};
    return j.dump();
}

std::string metrics_table(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%-10s %-10s %-10s %-8s %-8s %-8s\n"
                  "%-10.4f %-10.4f %-10.4f %-8.4f %-8.4f %-8.4f\n",
                  "Abs Rel", "Sq Rel", "RMSE", "d1", "d2", "d3", r.abs_rel, r.sq_rel, r.rmse,
                  r.delta1, r.delta2, r.delta3);
    return buf;
}

}  // namespace dadp
