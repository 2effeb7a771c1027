#include "dadp/align.hpp"

#include <algorithm>
#include <cmath>

namespace dadp {

namespace detail {

// Median of the masked values; fills idx (and weight 0.5/0.5 for even counts
// via two entries) with the contributing flat indices.
double masked_median(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                     std::vector<size_t>* median_indices) {
    std::vector<std::pair<double, size_t>> v;
    v.reserve(values.size());
    for (size_t i = 0; i < values.size(); ++i)
        if (mask[i]) v.emplace_back(values[i], i);
    const size_t m = v.size();
    if (m == 0) throw DataError("masked_median: empty mask");
    const size_t mid = m / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double med;
    if (m % 2 == 1) {
        med = v[mid].first;
        if (median_indices) *median_indices = {v[mid].second};
    } else {
        auto lo = std::max_element(v.begin(), v.begin() + mid);
        med = 0.5 * (lo->first + v[mid].first);
        if (median_indices) *median_indices = {lo->second, v[mid].second};
    }
    return med;
}

}  // namespace detail

AlignedDepth align_scale_shift(const DepthMap& d, const std::vector<uint8_t>& stats_mask,
                               double guard_rel) {
    if (stats_mask.size() != d.size())
        throw ShapeError("align_scale_shift: mask size mismatch");
    size_t m = 0;
    double vmin = 0.0, vmax = 0.0;
    bool first = true;
    for (size_t i = 0; i < d.size(); ++i) {
        if (!stats_mask[i]) continue;
        ++m;
        if (first) {
            vmin = vmax = d.values[i];
            first = false;
        } else {
            vmin = std::min(vmin, d.values[i]);
            vmax = std::max(vmax, d.values[i]);
        }
    }
    if (m < 2) throw DataError("align_scale_shift: need >= 2 masked pixels");

    AlignedDepth out;
    out.h = d.h;
    out.w = d.w;
    out.stats_mask = stats_mask;
    out.stats_count = m;
    out.shift = detail::masked_median(d.values, stats_mask, nullptr);

    double mad = 0.0;
    const long n = long(d.size());
#pragma omp parallel for schedule(static) reduction(+ : mad)
    for (long i = 0; i < n; ++i)
        if (stats_mask[i]) mad += std::abs(d.values[i] - out.shift);
    mad /= double(m);
    out.scale = mad;

    const double guard = guard_rel * std::max(vmax - vmin, 1.0e-30);
    out.degenerate = mad < guard;
    const double denom = std::max(mad, guard);

    out.values.resize(d.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out.values[i] = (d.values[i] - out.shift) / denom;
    return out;
}

}  // namespace dadp
