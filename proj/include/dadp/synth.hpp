#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dadp/grid.hpp"
#include "dadp/masks.hpp"

namespace dadp {

/// Procedurally rendered scene: textured solids standing on a receding ground
/// plane, dense depth, exact visible-object masks. Object colors are
/// uncorrelated with depth; the depth cue is the ground-contact row, so dense
/// prediction needs spatial context rather than per-pixel color lookup.
struct Scene {
    Image image;      // [-1, 1] RGB
    DepthMap depth;   // dense, positive
    ObjectMaskSet objects;
    uint64_t seed = 0;
};

Scene synth_scene(uint64_t seed, int size);

enum class SparsifyPattern { uniform, scanline };

/// Thins the validity mask to target_density (fraction of currently valid
/// pixels retained is target/current). Values are untouched. scanline keeps
/// Poisson-spaced rows and subsamples within them, mimicking LiDAR stripes.
DepthMap sparsify(const DepthMap& gt, double target_density, SparsifyPattern pattern,
                  uint64_t seed);

SparsifyPattern sparsify_pattern_from_string(const std::string& s);

// Dataset directory convention: {dir}/{id}.png, {id}.depth.pfm, {id}.masks.png
// plus manifest.json listing ids and per-image density.
struct DatasetManifest {
    std::vector<std::string> ids;
    std::vector<double> densities;
};

void write_scene(const Scene& scene, const std::string& dir, const std::string& id);
Scene load_scene(const std::string& dir, const std::string& id);
void write_manifest(const DatasetManifest& m, const std::string& dir);
DatasetManifest load_manifest(const std::string& dir);

void save_image_png(const Image& img, const std::string& path);
Image load_image_png(const std::string& path);

/// 8-bit PNG visualization of a depth map with a fixed colormap.
void save_depth_viz_png(const DepthMap& depth, const std::string& path);

}  // namespace dadp
