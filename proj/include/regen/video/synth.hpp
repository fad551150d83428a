#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "regen/video/clip.hpp"

namespace regen {

// Procedural moving-shapes clips: solid-color rectangles and ellipses on a
// solid background, translating linearly with wall bounce. Deterministic:
// clip i of a config is a pure function of (seed, i).
struct SynthConfig {
    uint64_t seed = 0;
    int64_t num_clips = 1;
    int shapes_per_clip = 1;
    int64_t h = 64, w = 64, t = 5;
    double velocity_range = 2.0;  // pixels/frame per axis
};

struct SynthShape {
    bool ellipse = false;
    double cx0 = 0, cy0 = 0;      // center at frame 0
    double half_w = 0, half_h = 0;
    double vx = 0, vy = 0;        // pixels/frame
    double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;  // bounce bounds
    std::array<float, 3> color = {0, 0, 0};
};

struct SynthInfo {
    std::array<float, 3> bg = {0, 0, 0};
    std::vector<SynthShape> shapes;
};

// Continuous-time center of a bouncing shape (triangle-wave reflection).
void shape_center_at(const SynthShape& s, double frame, double* cx, double* cy);

VideoClip synth_clip(const SynthConfig& cfg, int64_t index,
                     SynthInfo* info = nullptr);

std::vector<VideoClip> synth_dataset(const SynthConfig& cfg);

}  // namespace regen
