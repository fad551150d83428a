#pragma once

#include <string>
#include <vector>

#include "regen/core/tensor.hpp"
#include "regen/error.hpp"

namespace regen {

// A frame sequence in model pixel range [-1, 1], channels-last [T,H,W,3].
struct VideoClip {
    Tensor frames;  // [T,H,W,3]
    double frame_rate = 24.0;
    std::string source_id;

    int64_t t() const { return frames.dim(0); }
    int64_t h() const { return frames.dim(1); }
    int64_t w() const { return frames.dim(2); }
};

struct ChunkSpec {
    int k = 4;        // temporal compression ratio, one of {4, 8, 16, 32}
    int m = 8;        // spatial compression ratio, fixed

    int chunk_len() const { return k + 1; }
};

inline bool valid_k(int k) {
    return k == 4 || k == 8 || k == 16 || k == 32;
}

// Throws unless the clip satisfies the VideoClip invariants.
void validate_clip(const VideoClip& clip, bool require_div8 = true);

// Split into disjoint (k+1)-frame chunks. T must be a positive multiple of
// k+1; otherwise throws ChunkError carrying the minimal valid padded length.
std::vector<VideoClip> chunk(const VideoClip& clip, const ChunkSpec& spec);

// Inverse of chunk.
VideoClip concat_clips(const std::vector<VideoClip>& chunks);

// Aspect-preserving bilinear rescale (shorter side matched) + center crop.
VideoClip preprocess(const VideoClip& clip, int64_t target_h, int64_t target_w);

// Single frame extraction as a T=1 clip.
VideoClip frame_of(const VideoClip& clip, int64_t index);

}  // namespace regen
