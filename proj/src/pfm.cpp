#include "dadp/pfm.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace dadp {

void save_depth_pfm(const DepthMap& depth, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_depth_pfm: cannot open " + path);
    f << "Pf\n" << depth.w << " " << depth.h << "\n-1.0\n";
    std::vector<float> row(depth.w);
    // PFM scanlines run bottom-to-top.
    for (int y = depth.h - 1; y >= 0; --y) {
        for (int x = 0; x < depth.w; ++x)
            row[x] = depth.is_valid(y, x) ? float(depth.at(y, x)) : kInvalidDepthSentinel;
        f.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * depth.w);
    }
    if (!f) throw DataError("save_depth_pfm: write failed for " + path);
}

DepthMap load_depth_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("load_depth_pfm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "Pf")
        throw FormatError("load_depth_pfm: bad magic '" + magic + "' in " + path +
                          " (only grayscale 'Pf' supported)");
    int w = 0, h = 0;
    double scale = 0.0;
    f >> w >> h >> scale;
    if (!f || w <= 0 || h <= 0 || scale == 0.0)
        throw FormatError("load_depth_pfm: malformed header in " + path);
    if (scale > 0.0)
        throw FormatError("load_depth_pfm: big-endian PFM not supported: " + path);
    f.get();  // single whitespace after the scale line

    DepthMap d(h, w);
    std::vector<float> row(w);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), sizeof(float) * w);
        if (!f) throw FormatError("load_depth_pfm: truncated payload in " + path);
        for (int x = 0; x < w; ++x) {
            const bool invalid = row[x] < 0.0f;
            d.at(y, x) = invalid ? 0.0 : double(row[x]);
            d.valid[size_t(y) * w + x] = invalid ? 0 : 1;
        }
    }
    return d;
}

}  // namespace dadp
