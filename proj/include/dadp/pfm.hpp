#pragma once

#include <string>

#include "dadp/grid.hpp"

namespace dadp {

// Grayscale PFM ("Pf"), negative scale = little endian, bottom-up scanlines.
// Invalid pixels round-trip through a negative sentinel value.

inline constexpr float kInvalidDepthSentinel = -1.0f;

void save_depth_pfm(const DepthMap& depth, const std::string& path);
DepthMap load_depth_pfm(const std::string& path);

}  // namespace dadp
