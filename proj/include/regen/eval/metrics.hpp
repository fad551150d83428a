#pragma once

#include "regen/video/clip.hpp"

namespace regen {

// PSNR in dB over [0,1]-mapped values; capped at 100 dB when MSE < 1e-10.
double psnr(const VideoClip& a, const VideoClip& b);

// Mean over frames of 11x11 Gaussian-windowed SSIM on BT.601 luma,
// constants C1=0.01^2, C2=0.03^2 on the [0,1] range, valid windows only.
double ssim(const VideoClip& a, const VideoClip& b, int window = 11);

// r = (C * m^2 * k) / (c_lat * latents_per_chunk); per-chunk form of the
// pixels-per-latent-element ratio with T-1 = k and t = latents_per_chunk.
double compression_factor(int channels, int m, int k, int c_lat,
                          int latents_per_chunk);

// Mean abs difference between the last frame of chunk i and the first frame
// of chunk i+1, averaged over boundaries. 0 when the clip has one chunk.
double boundary_discontinuity(const VideoClip& clip, int k);

}  // namespace regen
