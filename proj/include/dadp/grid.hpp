#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dadp {

// Error taxonomy; the CLI maps these onto exit codes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interleaved HWC float image, values nominally in [-1, 1].
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), data(size_t(h_) * w_ * c_, 0.f) {}

    float& at(int y, int x, int ch) { return data[(size_t(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return data[(size_t(y) * w + x) * c + ch]; }
    size_t pixels() const { return size_t(h) * w; }
};

/// Relative depth map (larger = farther) with a per-pixel validity mask.
/// Predictions carry an all-true mask; sparse ground truth does not.
struct DepthMap {
    int h = 0;
    int w = 0;
    std::vector<double> values;
    std::vector<uint8_t> valid;

    DepthMap() = default;
    DepthMap(int h_, int w_, double fill = 0.0, bool valid_all = true)
        : h(h_), w(w_),
          values(size_t(h_) * w_, fill),
          valid(size_t(h_) * w_, valid_all ? 1 : 0) {}

    size_t size() const { return values.size(); }
    double& at(int y, int x) { return values[size_t(y) * w + x]; }
    double at(int y, int x) const { return values[size_t(y) * w + x]; }
    bool is_valid(int y, int x) const { return valid[size_t(y) * w + x] != 0; }

    size_t valid_count() const {
        size_t n = 0;
        for (uint8_t v : valid) n += v != 0;
        return n;
    }
    double density() const { return size() ? double(valid_count()) / double(size()) : 0.0; }
};

inline void require_same_shape(const DepthMap& a, const DepthMap& b, const char* what) {
    if (a.h != b.h || a.w != b.w)
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.h) + "x" +
                         std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                         std::to_string(b.w));
}

}  // namespace dadp
