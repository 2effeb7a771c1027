#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "dadp/pfm.hpp"
#include "dadp/synth.hpp"

using namespace dadp;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("dadp_test_" + name)).string();
}

}  // namespace

TEST_CASE("hand-written 2x2 grayscale file parses to the expected values") {
    // Header, then rows bottom-up: (3,4) first, (1,2) second, little endian.
    const std::string path = temp_path("fixture.pfm");
    {
        std::ofstream f(path, std::ios::binary);
        f << "Pf\n2 2\n-1.0\n";
        const float rows[4] = {3.f, 4.f, 1.f, 2.f};
        f.write(reinterpret_cast<const char*>(rows), sizeof(rows));
    }
    const DepthMap d = load_depth_pfm(path);
    CHECK(d.h == 2);
    CHECK(d.w == 2);
    CHECK(d.at(0, 0) == doctest::Approx(1.0));
    CHECK(d.at(0, 1) == doctest::Approx(2.0));
    CHECK(d.at(1, 0) == doctest::Approx(3.0));
    CHECK(d.at(1, 1) == doctest::Approx(4.0));
    CHECK(d.valid_count() == 4);
    fs::remove(path);
}

TEST_CASE("invalid pixels survive a save/load round trip via the sentinel") {
    DepthMap d(3, 5);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(0.5f, 20.f);
    for (auto& v : d.values) v = u(rng);
    d.valid[4] = 0;
    d.valid[11] = 0;
    const std::string path = temp_path("roundtrip.pfm");
    save_depth_pfm(d, path);

    // On-disk invalid pixels are the negative sentinel.
    std::ifstream f(path, std::ios::binary);
    std::string line;
    std::getline(f, line);
    CHECK(line == "Pf");
    std::getline(f, line);
    CHECK(line == "5 3");  // width height
    std::getline(f, line);
    CHECK(std::stod(line) < 0.0);  // little-endian marker

    const DepthMap back = load_depth_pfm(path);
    CHECK(back.valid == d.valid);
    for (size_t i = 0; i < d.size(); ++i)
        if (d.valid[i]) CHECK(back.values[i] == doctest::Approx(d.values[i]).epsilon(1e-6));
    fs::remove(path);
}

TEST_CASE("malformed headers are format errors") {
    const std::string path = temp_path("bad.pfm");
    {
        std::ofstream f(path, std::ios::binary);
        f << "PF\n2 2\n-1.0\n";  // color variant unsupported
        const float z[12] = {};
        f.write(reinterpret_cast<const char*>(z), sizeof(z));
    }
    CHECK_THROWS_AS(load_depth_pfm(path), FormatError);
    {
        std::ofstream f(path, std::ios::binary);
        f << "Pf\n2 2\n-1.0\n";
        const float one = 1.f;
        f.write(reinterpret_cast<const char*>(&one), sizeof(one));  // truncated
    }
    CHECK_THROWS_AS(load_depth_pfm(path), FormatError);
    CHECK_THROWS_AS(load_depth_pfm(temp_path("missing.pfm")), FormatError);
    fs::remove(path);
}

TEST_CASE("uniform sparsify hits the target count exactly and keeps values") {
    DepthMap gt(64, 64);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    for (auto& v : gt.values) v = u(rng);
    const DepthMap sparse = sparsify(gt, 0.0024, SparsifyPattern::uniform, 9);
    CHECK(sparse.valid_count() == size_t(std::llround(0.0024 * 64 * 64)));
    CHECK(sparse.values == gt.values);
    for (size_t i = 0; i < sparse.size(); ++i)
        if (sparse.valid[i]) CHECK(gt.valid[i]);
}

TEST_CASE("density 1.0 is the identity") {
    DepthMap gt(16, 16);
    for (size_t i = 0; i < gt.size(); ++i) gt.values[i] = double(i);
    gt.valid[3] = 0;
    const DepthMap same = sparsify(gt, 1.0, SparsifyPattern::uniform, 1);
    CHECK(same.valid == gt.valid);
    CHECK(same.values == gt.values);
}

TEST_CASE("sparsify is deterministic and seed-sensitive") {
    DepthMap gt(32, 32, 1.0);
    const DepthMap a = sparsify(gt, 0.05, SparsifyPattern::uniform, 11);
    const DepthMap b = sparsify(gt, 0.05, SparsifyPattern::uniform, 11);
    const DepthMap c = sparsify(gt, 0.05, SparsifyPattern::uniform, 12);
    CHECK(a.valid == b.valid);
    CHECK(a.valid != c.valid);
}

TEST_CASE("scanline sparsify confines samples to a few full rows") {
    DepthMap gt(64, 64, 1.0);
    const double density = 0.0185;
    const DepthMap sparse = sparsify(gt, density, SparsifyPattern::scanline, 21);
    const size_t keep = size_t(std::llround(density * 64 * 64));
    CHECK(sparse.valid_count() == keep);

    std::set<int> rows;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (sparse.is_valid(y, x)) rows.insert(y);
    // Row budget: ceil(1.5 * keep / w), plus at most a couple of fill rows.
    const int budget = int(std::ceil(1.5 * double(keep) / 64.0)) + 2;
    CHECK(int(rows.size()) <= budget);
    CHECK(int(rows.size()) >= 1);
}

TEST_CASE("sparsify validates the density argument") {
    DepthMap gt(8, 8, 1.0);
    CHECK_THROWS_AS(sparsify(gt, 0.0, SparsifyPattern::uniform, 0), ConfigError);
    CHECK_THROWS_AS(sparsify(gt, 1.5, SparsifyPattern::uniform, 0), ConfigError);
    CHECK_THROWS_AS(sparsify_pattern_from_string("diag"), ConfigError);
}

TEST_CASE("generated scenes satisfy the documented contracts") {
    for (uint64_t seed = 0; seed < 40; ++seed) {
        const Scene s = synth_scene(seed, 48);
        CHECK(s.image.h == 48);
        CHECK(s.image.c == 3);
        REQUIRE(s.depth.size() == size_t(48 * 48));
        CHECK(s.depth.valid_count() == s.depth.size());
        double dmin = 1e30, dmax = -1e30;
        for (double v : s.depth.values) {
            CHECK(v > 0.0);
            dmin = std::min(dmin, v);
            dmax = std::max(dmax, v);
        }
        const double scene_range = dmax - dmin;
        CHECK(s.objects.K >= 3);
        CHECK(s.objects.K <= 8);

        std::vector<int> cover(48 * 48, 0);
        for (int i = 0; i < s.objects.K; ++i) {
            CHECK(s.objects.pixel_counts[i] >= 16);
            double omin = 1e30, omax = -1e30;
            for (size_t p = 0; p < cover.size(); ++p)
                if (s.objects.masks[i][p]) {
                    cover[p] += 1;
                    omin = std::min(omin, s.depth.values[p]);
                    omax = std::max(omax, s.depth.values[p]);
                }
            // Generator contract: each object spans a narrow depth band.
            CHECK(omax - omin < 0.3 * scene_range);
        }
        for (int c : cover) CHECK(c <= 1);  // visible masks are disjoint
    }
    CHECK_THROWS_AS(synth_scene(0, 50), ConfigError);  // not a multiple of 16
}

TEST_CASE("scene files and manifest round trip through the dataset layout") {
    const std::string dir = temp_path("dataset");
    fs::remove_all(dir);
    const Scene s = synth_scene(77, 48);
    write_scene(s, dir, "scene_a");
    DatasetManifest m;
    m.ids = {"scene_a"};
    m.densities = {s.depth.density()};
    write_manifest(m, dir);

    const DatasetManifest m2 = load_manifest(dir);
    CHECK(m2.ids == m.ids);
    const Scene back = load_scene(dir, "scene_a");
    CHECK(back.image.h == s.image.h);
    CHECK(back.objects.K == s.objects.K);
    CHECK(back.depth.valid == s.depth.valid);
    for (size_t i = 0; i < s.depth.size(); ++i)
        CHECK(back.depth.values[i] == doctest::Approx(s.depth.values[i]).epsilon(1e-6));
    // 8-bit image round trip: equal within quantization.
    for (size_t i = 0; i < s.image.data.size(); ++i)
        CHECK(std::abs(back.image.data[i] - s.image.data[i]) <= 1.f / 127.f);
    for (int i = 0; i < s.objects.K; ++i) CHECK(back.objects.masks[i] == s.objects.masks[i]);
    fs::remove_all(dir);
}
