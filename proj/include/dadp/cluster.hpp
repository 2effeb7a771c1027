#pragma once

#include <cstdint>
#include <vector>

namespace dadp {

struct KMeansResult {
    int k = 0;
    int dim = 0;
    std::vector<int> labels;      // one per point
    std::vector<double> centers;  // k * dim
    int iterations = 0;
};

/// Lloyd's algorithm with farthest-point seeding from the given seed.
/// Stops after max_iters or when every center moves less than tol (L2).
KMeansResult kmeans(const std::vector<double>& points, int n, int dim, int k, uint64_t seed,
                    int max_iters = 100, double tol = 1e-6);

/// Cosine similarity with the zero-vector convention: 1 for zero-vs-zero,
/// 0 when exactly one side is zero.
double cosine_similarity(const double* a, const double* b, int dim);

/// Mean area of 4-connected components of a label map.
double mean_component_area(const std::vector<int>& labels, int h, int w);

}  // namespace dadp
