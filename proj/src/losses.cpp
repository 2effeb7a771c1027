#include "dadp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dadp {

namespace {

double list_median(std::vector<double> v) {
    const size_t m = v.size();
    const size_t mid = m / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    if (m % 2 == 1) return v[mid];
    double hi = v[mid];
    double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Everything the alignment backward pass needs besides the upstream gradient.
struct AlignChain {
    double denom = 1.0;  // max(mad, guard)
    bool degenerate = false;
    std::vector<size_t> med_idx;
    double med_w = 1.0;
    double sum_sign = 0.0;  // sum over stats pixels of sign(d_i - shift)
    size_t m = 0;
};

AlignChain build_chain(const DepthMap& d, const AlignedDepth& a, double guard_rel) {
    AlignChain c;
    c.m = a.stats_count;
    c.degenerate = a.degenerate;
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < d.size(); ++i) {
        if (!a.stats_mask[i]) continue;
        vmin = std::min(vmin, d.values[i]);
        vmax = std::max(vmax, d.values[i]);
        c.sum_sign += sgn(d.values[i] - a.shift);
    }
    c.denom = std::max(a.scale, guard_rel * std::max(vmax - vmin, 1.0e-30));
    detail::masked_median(d.values, a.stats_mask, &c.med_idx);
    c.med_w = c.med_idx.size() == 2 ? 0.5 : 1.0;
    return c;
}

// Pulls an upstream gradient on aligned values back to the raw depth:
// dhat_p = (d_p - t) / s with t the masked median and s the masked MAD.
std::vector<double> backprop_alignment(const std::vector<double>& upstream,
                                       const AlignedDepth& a, const AlignChain& c) {
    std::vector<double> grad(upstream.size(), 0.0);
    if (c.degenerate) return grad;
    double u1 = 0.0, u2 = 0.0;
    const long n = long(upstream.size());
#pragma omp parallel for schedule(static) reduction(+ : u1, u2)
    for (long i = 0; i < n; ++i) {
        u1 += upstream[i];
        u2 += upstream[i] * a.values[i];
    }
    const double inv_s = 1.0 / c.denom;
    const double inv_sm = inv_s / double(c.m);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        double g = upstream[i] * inv_s;
        if (a.stats_mask[i]) {
            const double sigma = sgn((a.values[i] != 0.0) ? a.values[i] : 0.0);
            g -= u2 * inv_sm * sigma;
        }
        grad[i] = g;
    }
    for (size_t j : c.med_idx) {
        grad[j] -= c.med_w * u1 * inv_s;
        grad[j] += c.med_w * u2 * inv_sm * c.sum_sign;
    }
    return grad;
}

void check_objects(const ObjectMaskSet& objects, const DepthMap& pred) {
    if (objects.K == 0) return;
    if (objects.h != pred.h || objects.w != pred.w)
        throw ShapeError("losses: object masks sized " + std::to_string(objects.h) + "x" +
                         std::to_string(objects.w) + " do not match depth " +
                         std::to_string(pred.h) + "x" + std::to_string(pred.w));
}

}  // namespace

ObjectBounds object_bounds(const std::vector<double>& pred_in_object,
                           const std::vector<double>& gt_in_object, double alpha) {
    if (pred_in_object.empty()) throw DataError("object_bounds: empty object");
    ObjectBounds b;
    const double med = list_median(pred_in_object);
    double hi = med, lo = med;
    if (gt_in_object.empty()) {
        b.source = ObjectBounds::Source::median_only;
    } else {
        b.source = ObjectBounds::Source::gt_and_median;
        const auto [gmin, gmax] = std::minmax_element(gt_in_object.begin(), gt_in_object.end());
        hi = std::max(*gmax, med);
        lo = std::min(*gmin, med);
    }
    // The tolerance factor widens the band outward on both sides. Values are
    // aligned depths and may be negative; a naive (1+alpha)*hi / (1-alpha)*lo
    // shrinks the band on the negative side (and can invert it), so the
    // multiplier is chosen per sign.
    b.upper = hi >= 0.0 ? (1.0 + alpha) * hi : (1.0 - alpha) * hi;
    b.lower = lo >= 0.0 ? (1.0 - alpha) * lo : (1.0 + alpha) * lo;
    if (b.lower > b.upper) {  // unreachable for alpha in (0,1); kept as a guard
        std::swap(b.lower, b.upper);
        b.swapped = true;
    }
    return b;
}

std::vector<uint8_t> abnormal_region(const std::vector<double>& pred_in_object,
                                     const ObjectBounds& bounds,
                                     const std::vector<uint8_t>& occlusion_in_object) {
    if (!occlusion_in_object.empty() && occlusion_in_object.size() != pred_in_object.size())
        throw ShapeError("abnormal_region: occlusion mask size mismatch");
    std::vector<uint8_t> out(pred_in_object.size(), 0);
    for (size_t i = 0; i < pred_in_object.size(); ++i) {
        const bool outside =
            pred_in_object[i] > bounds.upper || pred_in_object[i] < bounds.lower;
        const bool occluded = !occlusion_in_object.empty() && occlusion_in_object[i];
        out[i] = outside && !occluded;
    }
    return out;
}

double integrality_loss(const AlignedDepth& pred_aligned, const ObjectMaskSet& objects,
                        const AlignedDepth& gt_aligned, const DepthMap& gt_validity,
                        const LossConfig& cfg, size_t* abnormal_count, int* swap_count) {
    if (objects.K == 0) {
        if (abnormal_count) *abnormal_count = 0;
        if (swap_count) *swap_count = 0;
        return 0.0;
    }
    if (objects.h != pred_aligned.h || objects.w != pred_aligned.w)
        throw ShapeError("integrality_loss: mask/depth shape mismatch");

    double acc = 0.0;
    size_t abn = 0;
    int swaps = 0;
    for (int i = 0; i < objects.K; ++i) {
        const auto& mask = objects.masks[i];
        std::vector<double> pred_list, gt_list;
        std::vector<uint8_t> occ_list;
        const bool has_occ = !objects.occlusion.empty() && !objects.occlusion[i].empty();
        for (size_t p = 0; p < mask.size(); ++p) {
            if (!mask[p]) continue;
            pred_list.push_back(pred_aligned.values[p]);
            occ_list.push_back(has_occ ? objects.occlusion[i][p] : 0);
            if (gt_validity.valid[p]) gt_list.push_back(gt_aligned.values[p]);
        }
        if (pred_list.empty()) continue;
        const ObjectBounds b = object_bounds(pred_list, gt_list, cfg.alpha);
        swaps += b.swapped;
        const auto ab = abnormal_region(pred_list, b, occ_list);
        for (size_t p = 0; p < pred_list.size(); ++p) {
            if (!ab[p]) continue;
            ++abn;
            acc += std::min(std::abs(pred_list[p] - b.upper), std::abs(pred_list[p] - b.lower));
        }
    }
    if (abnormal_count) *abnormal_count = abn;
    if (swap_count) *swap_count = swaps;
    return acc / double(objects.K);
}

TotalLossResult total_loss(const DepthMap& pred, const DepthMap& gt,
                           const ObjectMaskSet& objects, const LossConfig& cfg,
                           bool with_grad) {
    require_same_shape(pred, gt, "total_loss");
    check_objects(objects, pred);
    const size_t M = gt.valid_count();
    if (M < 2) throw DataError("total_loss: need >= 2 valid ground-truth pixels");

    // One per-image alignment; the prediction borrows the ground truth's
    // statistics support so both operands are normalized over the same pixels.
    const AlignedDepth pa = align_scale_shift(pred, gt.valid, cfg.scale_guard_rel);
    const AlignedDepth ga = align_scale_shift(gt, gt.valid, cfg.scale_guard_rel);

    TotalLossResult res;
    res.breakdown.valid_pixels = M;
    res.breakdown.pred_degenerate = pa.degenerate;
    res.breakdown.gt_degenerate = ga.degenerate;

    const long n = long(pred.size());
    double af = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : af)
    for (long i = 0; i < n; ++i)
        if (gt.valid[i]) af += std::abs(pa.values[i] - ga.values[i]);
    af /= 2.0 * double(M);
    res.breakdown.affinity = af;

    // Integrality term plus per-pixel upstream gradients on aligned values.
    std::vector<double> u_obj;
    if (with_grad) u_obj.assign(pred.size(), 0.0);
    double obj_acc = 0.0;
    size_t abn = 0;
    int swaps = 0;
    if (objects.K > 0) {
        for (int i = 0; i < objects.K; ++i) {
            const auto& mask = objects.masks[i];
            std::vector<double> pred_list, gt_list;
            std::vector<size_t> idx_list;
            const bool has_occ = !objects.occlusion.empty() && !objects.occlusion[i].empty();
            for (size_t p = 0; p < mask.size(); ++p) {
                if (!mask[p]) continue;
                pred_list.push_back(pa.values[p]);
                idx_list.push_back(p);
                if (gt.valid[p]) gt_list.push_back(ga.values[p]);
            }
            if (pred_list.empty()) continue;
            const ObjectBounds b = object_bounds(pred_list, gt_list, cfg.alpha);
            swaps += b.swapped;
            for (size_t p = 0; p < pred_list.size(); ++p) {
                const double v = pred_list[p];
                if (!(v > b.upper || v < b.lower)) continue;
                if (has_occ && objects.occlusion[i][idx_list[p]]) continue;
                ++abn;
                const double du = std::abs(v - b.upper);
                const double dl = std::abs(v - b.lower);
                obj_acc += std::min(du, dl);
                if (with_grad) {
                    // Bounds are constants; tie goes to the upper branch.
                    const double g = du <= dl ? sgn(v - b.upper) : sgn(v - b.lower);
                    u_obj[idx_list[p]] += g / double(objects.K);
                }
            }
        }
        obj_acc /= double(objects.K);
    }
    res.breakdown.integrality = obj_acc;
    res.breakdown.abnormal_pixels = abn;
    res.breakdown.bound_swaps = swaps;
    res.breakdown.total = af + cfg.lambda * obj_acc;

    if (with_grad) {
        const AlignChain chain = build_chain(pred, pa, cfg.scale_guard_rel);
        std::vector<double> u_af(pred.size(), 0.0);
        const double w = 1.0 / (2.0 * double(M));
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i)
            if (gt.valid[i]) u_af[i] = w * sgn(pa.values[i] - ga.values[i]);
        res.grad_affinity = backprop_alignment(u_af, pa, chain);
        res.grad_integrality = backprop_alignment(u_obj, pa, chain);
    }
    return res;
}

double affinity_loss(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg) {
    return total_loss(pred, gt, ObjectMaskSet{}, cfg, false).breakdown.affinity;
}

}  // namespace dadp
