#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "regen/model/latent.hpp"

namespace regen {

// On-disk latent container. Little-endian header:
//   magic "RGLT", version u16=1, k u16, m u16=8, c_lat u16=8,
//   dtype u8 (0=f32, 1=f16), n_chunks u32, h u32, w u32,
//   orig_T u32, orig_H u32, orig_W u32
// Payload: per chunk, z_c then z_m, row-major [h,w,c_lat]. The f32 path
// round-trips bit-identically; f16 makes the 32x compression tangible on
// disk at a quantization cost.
struct LatentFile {
    int k = 4;
    int m = 8;
    int c_lat = kLatentChannels;
    bool f16 = false;
    int64_t orig_t = 0, orig_h = 0, orig_w = 0;
    std::vector<LatentChunk> chunks;

    int64_t h() const { return chunks.empty() ? 0 : chunks[0].h(); }
    int64_t w() const { return chunks.empty() ? 0 : chunks[0].w(); }
};

void write_latent_file(const LatentFile& lf, const std::filesystem::path& path);
LatentFile read_latent_file(const std::filesystem::path& path);

// IEEE 754 binary16 conversion (round to nearest even).
uint16_t float_to_half(float v);
float half_to_float(uint16_t h);

}  // namespace regen
