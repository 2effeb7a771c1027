#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <random>
#include <vector>

#include "dadp/cluster.hpp"
#include "dadp/masks.hpp"

using namespace dadp;

TEST_CASE("cosine similarity zero-vector conventions") {
    const double zero[3] = {0, 0, 0}, a[3] = {1, 2, 3}, b[3] = {2, 4, 6}, c[3] = {0, 0, 5},
                 d[3] = {5, 0, 0};
    CHECK(cosine_similarity(zero, zero, 3) == doctest::Approx(1.0));
    CHECK(cosine_similarity(zero, a, 3) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, b, 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(c, d, 3) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("k-means recovers well-separated clusters") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> jitter(0.0, 0.05);
    const double centers[2][2] = {{0.0, 0.0}, {10.0, 10.0}};
    std::vector<double> pts;
    std::vector<int> truth;
    for (int i = 0; i < 60; ++i) {
        const int c = i % 2;
        pts.push_back(centers[c][0] + jitter(rng));
        pts.push_back(centers[c][1] + jitter(rng));
        truth.push_back(c);
    }
    const KMeansResult km = kmeans(pts, 60, 2, 2, 9);
    REQUIRE(km.labels.size() == 60);
    // Same partition up to label permutation.
    const int l0 = km.labels[0];
    for (int i = 0; i < 60; ++i) CHECK((km.labels[i] == l0) == (truth[i] == truth[0]));
    CHECK(km.iterations <= 100);
}

TEST_CASE("k=1 center is the mean of the points") {
    const std::vector<double> pts = {1.0, 3.0, 5.0, 7.0};  // two 2-d points
    const KMeansResult km = kmeans(pts, 2, 2, 1, 0);
    CHECK(km.centers[0] == doctest::Approx(3.0));
    CHECK(km.centers[1] == doctest::Approx(5.0));
}

TEST_CASE("k-means is deterministic under a fixed seed") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> pts(90);
    for (auto& v : pts) v = u(rng);
    const KMeansResult a = kmeans(pts, 30, 3, 4, 42);
    const KMeansResult b = kmeans(pts, 30, 3, 4, 42);
    CHECK(a.labels == b.labels);
    CHECK(a.centers == b.centers);
}

TEST_CASE("mean component area over a labeled map") {
    // 2x3 map: left 2x2 block label 0, right column label 1 -> areas {4, 2}.
    const std::vector<int> labels = {0, 0, 1, 0, 0, 1};
    CHECK(mean_component_area(labels, 2, 3) == doctest::Approx(3.0));
    CHECK(mean_component_area(std::vector<int>(16, 7), 4, 4) == doctest::Approx(16.0));
}

TEST_CASE("five-pixel object with k=1 flags exactly the least similar pixel") {
    Image img(1, 5, 3);
    const float colors[5][3] = {{0.5f, 0.1f, 0.1f},
                                {0.5f, 0.12f, 0.1f},
                                {0.48f, 0.1f, 0.12f},
                                {0.5f, 0.11f, 0.09f},
                                {-0.1f, 0.9f, 0.9f}};  // the outlier
    for (int x = 0; x < 5; ++x)
        for (int ch = 0; ch < 3; ++ch) img.at(0, x, ch) = colors[x][ch];
    const std::vector<uint8_t> object(5, 1);
    const std::vector<uint8_t> occ = occlusion_mask(img, object, 1, 0.20, 123);
    CHECK(occ == std::vector<uint8_t>{0, 0, 0, 0, 1});
}

TEST_CASE("uniformly colored object has no occluded pixels") {
    Image img(2, 4, 3);
    for (auto& v : img.data) v = 0.3f;
    const std::vector<uint8_t> object(8, 1);
    const std::vector<uint8_t> occ = occlusion_mask(img, object, 2, 0.20, 7);
    CHECK(std::count(occ.begin(), occ.end(), 1) == 0);
}

TEST_CASE("index map splits into per-object boolean masks") {
    // 3x4 map: object 1 = top-left 2x2, object 2 = single pixel, background 0.
    const std::vector<uint16_t> index = {1, 1, 0, 0, 1, 1, 0, 2, 0, 0, 0, 0};
    const ObjectMaskSet set = object_masks_from_index_map(index, 3, 4, 1);
    CHECK(set.K == 2);
    CHECK(set.pixel_counts[0] == 4);
    CHECK(set.pixel_counts[1] == 1);
    CHECK(set.masks[0][0] == 1);
    CHECK(set.masks[0][7] == 0);
    CHECK(set.masks[1][7] == 1);

    const ObjectMaskSet filtered = object_masks_from_index_map(index, 3, 4, 2);
    CHECK(filtered.K == 1);
    CHECK(filtered.dropped_small == 1);
}

TEST_CASE("objects smaller than k skip occlusion analysis") {
    const std::vector<uint16_t> index = {1, 0, 0, 2, 2, 2, 2, 2, 2};
    ObjectMaskSet set = object_masks_from_index_map(index, 3, 3, 1);
    Image img(3, 3, 3);
    std::mt19937 rng(1);
    for (auto& v : img.data) v = float(rng() % 100) / 100.f;
    compute_occlusions(set, img, 5, 0.20, 99);
    CHECK(set.occlusion_skips == 1);
    CHECK(set.occlusion[0].empty());
    CHECK(set.occlusion[1].size() == 9);
}
