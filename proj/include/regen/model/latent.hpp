#pragma once

#include <optional>

#include "regen/core/tensor.hpp"

namespace regen {

// The (z_c, z_m) pair for one chunk. z_m is absent exactly when the source
// was a single-frame (image) input. 8 channels each.
struct LatentChunk {
    Tensor z_c;                   // [h, w, 8]
    std::optional<Tensor> z_m;    // [h, w, 8]

    int64_t h() const { return z_c.dim(0); }
    int64_t w() const { return z_c.dim(1); }
    int64_t channels() const { return z_c.dim(2); }
};

inline constexpr int kLatentChannels = 8;

}  // namespace regen
