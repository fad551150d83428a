#pragma once

// VideoClip-level encode wrappers shared by the codec paths.

#include <vector>

#include "regen/model/latent.hpp"
#include "regen/video/clip.hpp"

namespace regen {

// Model must expose encode_values([T,H,W,3]) and cfg.k.
template <class M>
LatentChunk encode_chunk(M& model, const VideoClip& chunk) {
    if (chunk.t() != model.cfg.k + 1)
        throw ShapeError("encode_chunk: expected " +
                         std::to_string(model.cfg.k + 1) + " frames, got " +
                         std::to_string(chunk.t()));
    LatentChunk lat;
    Tensor z_m;
    lat.z_c = model.encode_values(chunk.frames, &z_m);
    lat.z_m = z_m;
    return lat;
}

template <class M>
LatentChunk encode_image(M& model, const VideoClip& image) {
    if (image.t() != 1)
        throw ShapeError("encode_image: expected a single frame");
    LatentChunk lat;
    lat.z_c = model.encode_values(image.frames, nullptr);
    return lat;
}

template <class M>
std::vector<LatentChunk> encode_video(M& model, const VideoClip& clip) {
    std::vector<LatentChunk> out;
    for (const VideoClip& c : chunk(clip, ChunkSpec{model.cfg.k}))
        out.push_back(encode_chunk(model, c));
    return out;
}

}  // namespace regen
