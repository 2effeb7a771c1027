#include "dadp/cluster.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace dadp {

double cosine_similarity(const double* a, const double* b, int dim) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < dim; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const bool za = na == 0.0, zb = nb == 0.0;
    if (za && zb) return 1.0;
    if (za || zb) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

KMeansResult kmeans(const std::vector<double>& points, int n, int dim, int k, uint64_t seed,
                    int max_iters, double tol) {
    if (n <= 0 || dim <= 0 || k <= 0 || k > n)
        throw std::invalid_argument("kmeans: need 0 < k <= n and dim > 0");
    if (points.size() != size_t(n) * dim) throw std::invalid_argument("kmeans: bad point buffer");

    KMeansResult res;
    res.k = k;
    res.dim = dim;
    res.labels.assign(n, 0);
    res.centers.assign(size_t(k) * dim, 0.0);

    auto sqdist = [&](const double* a, const double* b) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    };

    // Farthest-point seeding: random first center, then repeatedly the point
    // farthest from its nearest chosen center.
    std::mt19937_64 rng(seed);
    std::vector<int> center_idx;
    center_idx.push_back(int(rng() % uint64_t(n)));
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        const double* last = &points[size_t(center_idx.back()) * dim];
        int far_i = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], sqdist(&points[size_t(i) * dim], last));
            if (nearest[i] > far_d) {
                far_d = nearest[i];
                far_i = i;
            }
        }
        center_idx.push_back(far_i);
    }
    for (int c = 0; c < k; ++c)
        for (int d = 0; d < dim; ++d)
            res.centers[size_t(c) * dim + d] = points[size_t(center_idx[c]) * dim + d];

    std::vector<double> new_centers(size_t(k) * dim);
    std::vector<int> counts(k);
    for (int iter = 0; iter < max_iters; ++iter) {
        res.iterations = iter + 1;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sqdist(&points[size_t(i) * dim], &res.centers[size_t(c) * dim]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            res.labels[i] = best;
        }
        std::fill(new_centers.begin(), new_centers.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            ++counts[res.labels[i]];
            for (int d = 0; d < dim; ++d)
                new_centers[size_t(res.labels[i]) * dim + d] += points[size_t(i) * dim + d];
        }
        double moved = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            double dist = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double v = new_centers[size_t(c) * dim + d] / counts[c];
                const double diff = v - res.centers[size_t(c) * dim + d];
                dist += diff * diff;
                res.centers[size_t(c) * dim + d] = v;
            }
            moved = std::max(moved, std::sqrt(dist));
        }
        if (moved < tol) break;
    }
    return res;
}

double mean_component_area(const std::vector<int>& labels, int h, int w) {
    if (labels.size() != size_t(h) * w) throw std::invalid_argument("mean_component_area: size");
    std::vector<int> comp(labels.size(), -1);
    int n_comp = 0;
    std::vector<size_t> stack;
    for (size_t start = 0; start < labels.size(); ++start) {
        if (comp[start] != -1) continue;
        const int id = n_comp++;
        stack.push_back(start);
        comp[start] = id;
        while (!stack.empty()) {
            const size_t p = stack.back();
            stack.pop_back();
            const int y = int(p / w), x = int(p % w);
            const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
            for (int d = 0; d < 4; ++d) {
                const int ny = y + dy[d], nx = x + dx[d];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const size_t q = size_t(ny) * w + nx;
                if (comp[q] == -1 && labels[q] == labels[p]) {
                    comp[q] = id;
                    stack.push_back(q);
                }
            }
        }
    }
    return double(labels.size()) / double(n_comp);
}

}  // namespace dadp
