#pragma once

// Frame-time coordinate grids. Chunk-relative: frame i of a chunk sits at
// t_f = i / k; a shift of s frames moves every coordinate by s / k.

#include <vector>

namespace regen {

inline std::vector<double> recon_coords(int k) {
    std::vector<double> c((size_t)k + 1);
    for (int i = 0; i <= k; ++i) c[(size_t)i] = (double)i / (double)k;
    return c;
}

inline std::vector<double> interp_coords(int k, int factor) {
    std::vector<double> c((size_t)(factor * k) + 1);
    for (int j = 0; j <= factor * k; ++j)
        c[(size_t)j] = (double)j / (double)(factor * k);
    return c;
}

inline std::vector<double> shifted_coords(int k, int shift) {
    std::vector<double> c((size_t)k + 1);
    for (int i = 0; i <= k; ++i) c[(size_t)i] = (double)(i + shift) / (double)k;
    return c;
}

}  // namespace regen
