#include "dadp/ref.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dadp::ref {

namespace {

double sorted_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Alignment done longhand: gather, sort, transform every pixel one by one.
std::vector<double> aligned(const DepthMap& d, const std::vector<uint8_t>& mask,
                            double guard_rel) {
    std::vector<double> sel;
    for (size_t i = 0; i < d.size(); ++i)
        if (mask[i]) sel.push_back(d.values[i]);
    const double med = sorted_median(sel);
    double mad = 0.0;
    for (double v : sel) mad += std::abs(v - med);
    mad /= double(sel.size());
    const double lo = *std::min_element(sel.begin(), sel.end());
    const double hi = *std::max_element(sel.begin(), sel.end());
    const double denom = std::max(mad, guard_rel * std::max(hi - lo, 1.0e-30));
    std::vector<double> out(d.size());
    for (size_t i = 0; i < d.size(); ++i) out[i] = (d.values[i] - med) / denom;
    return out;
}

}  // namespace

void q_sample(std::span<const double> x0, int t, std::span<const double> eps,
              const NoiseSchedule& sched, std::span<double> out) {
    // Recompute alpha_bar from beta instead of trusting the cached product.
    double abar = 1.0;
    for (int s = 0; s <= t; ++s) abar *= 1.0 - sched.beta[s];
    for (size_t i = 0; i < x0.size(); ++i)
        out[i] = std::sqrt(abar) * x0[i] + std::sqrt(1.0 - abar) * eps[i];
}

double noise_mse(std::span<const double> eps_hat, std::span<const double> eps) {
    double s = 0.0;
    for (size_t i = 0; i < eps.size(); ++i) s += (eps_hat[i] - eps[i]) * (eps_hat[i] - eps[i]);
    return eps.empty() ? 0.0 : s / double(eps.size());
}

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, AlignmentMode mode) {
    MetricsReport r;
    r.alignment = mode;
    std::vector<size_t> idx;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (!gt.valid[i]) continue;
        if (gt.values[i] > 0.0)
            idx.push_back(i);
        else
            ++r.excluded_nonpositive;
    }
    if (idx.empty()) throw DataError("ref::compute_metrics: no usable pixels");
    r.valid_pixels = idx.size();

    std::vector<double> p(idx.size()), g(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
        p[j] = pred.values[idx[j]];
        g[j] = gt.values[idx[j]];
    }
    if (mode == AlignmentMode::median_scale_shift) {
        const double pm = sorted_median(p), gm = sorted_median(g);
        double pmad = 0.0, gmad = 0.0;
        for (double v : p) pmad += std::abs(v - pm);
        for (double v : g) gmad += std::abs(v - gm);
        pmad /= double(p.size());
        gmad /= double(g.size());
        // Match the production guard on the prediction MAD.
        const double plo = *std::min_element(p.begin(), p.end());
        const double phi = *std::max_element(p.begin(), p.end());
        const double pden = std::max(pmad, 1e-6 * std::max(phi - plo, 1.0e-30));
        for (double& v : p)
            v = std::max((v - pm) / pden * std::max(gmad, 1.0e-12) + gm, 1.0e-3 * gm);
    }
    for (size_t j = 0; j < idx.size(); ++j) {
        const double diff = p[j] - g[j];
        r.abs_rel += std::abs(diff) / g[j];
        r.sq_rel += diff * diff / g[j];
        r.rmse += diff * diff;
        const double ratio = std::max(p[j] / g[j], g[j] / p[j]);
        r.delta1 += ratio < 1.25 ? 1.0 : 0.0;
        r.delta2 += ratio < std::pow(1.25, 2) ? 1.0 : 0.0;
        r.delta3 += ratio < std::pow(1.25, 3) ? 1.0 : 0.0;
    }
    const double m = double(idx.size());
    r.abs_rel /= m;
    r.sq_rel /= m;
    r.rmse = std::sqrt(r.rmse / m);
    r.delta1 /= m;
    r.delta2 /= m;
    r.delta3 /= m;
    return r;
}

double affinity_loss(const DepthMap& pred, const DepthMap& gt) {
    const auto pa = aligned(pred, gt.valid, 1e-6);
    const auto ga = aligned(gt, gt.valid, 1e-6);
    double s = 0.0;
    size_t m = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (!gt.valid[i]) continue;
        s += std::abs(pa[i] - ga[i]);
        ++m;
    }
    return s / (2.0 * double(m));
}

LossBreakdown total_loss(const DepthMap& pred, const DepthMap& gt, const ObjectMaskSet& objects,
                         const LossConfig& cfg) {
    LossBreakdown out;
    const auto pa = aligned(pred, gt.valid, cfg.scale_guard_rel);
    const auto ga = aligned(gt, gt.valid, cfg.scale_guard_rel);
    size_t m = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (!gt.valid[i]) continue;
        out.affinity += std::abs(pa[i] - ga[i]);
        ++m;
    }
    out.affinity /= 2.0 * double(m);
    out.valid_pixels = m;

    for (int i = 0; i < objects.K; ++i) {
        std::vector<double> plist, glist;
        std::vector<size_t> where;
        for (size_t p = 0; p < objects.masks[i].size(); ++p) {
            if (!objects.masks[i][p]) continue;
            plist.push_back(pa[p]);
            where.push_back(p);
            if (gt.valid[p]) glist.push_back(ga[p]);
        }
        if (plist.empty()) continue;
        const double med = sorted_median(plist);
        double hi = med, lo = med;
        if (!glist.empty()) {
            hi = std::max(*std::max_element(glist.begin(), glist.end()), med);
            lo = std::min(*std::min_element(glist.begin(), glist.end()), med);
        }
        // Tolerance widens the band outward on both sides (sign-aware).
        double U = hi >= 0.0 ? (1.0 + cfg.alpha) * hi : (1.0 - cfg.alpha) * hi;
        double L = lo >= 0.0 ? (1.0 - cfg.alpha) * lo : (1.0 + cfg.alpha) * lo;
        if (L > U) {
            std::swap(L, U);
            ++out.bound_swaps;
        }
        for (size_t j = 0; j < plist.size(); ++j) {
            if (!(plist[j] > U || plist[j] < L)) continue;
            if (!objects.occlusion.empty() && !objects.occlusion[i].empty() &&
                objects.occlusion[i][where[j]])
                continue;
            ++out.abnormal_pixels;
            out.integrality += std::min(std::abs(plist[j] - U), std::abs(plist[j] - L));
        }
    }
    if (objects.K > 0) out.integrality /= double(objects.K);
    out.total = out.affinity + cfg.lambda * out.integrality;
    return out;
}

}  // namespace dadp::ref
