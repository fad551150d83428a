#include "regen/video/synth.hpp"

#include <omp.h>

#include <cmath>

#include "regen/core/rng.hpp"

namespace regen {

namespace {

double reflect(double p, double lo, double hi) {
    if (hi <= lo) return lo;
    const double L = hi - lo;
    double u = std::fmod(p - lo, 2.0 * L);
    if (u < 0) u += 2.0 * L;
    return lo + (u < L ? u : 2.0 * L - u);
}

}  // namespace

void shape_center_at(const SynthShape& s, double frame, double* cx,
                     double* cy) {
    *cx = reflect(s.cx0 + s.vx * frame, s.lo_x, s.hi_x);
    *cy = reflect(s.cy0 + s.vy * frame, s.lo_y, s.hi_y);
}

VideoClip synth_clip(const SynthConfig& cfg, int64_t index, SynthInfo* info) {
    if (cfg.h < 16 || cfg.w < 16)
        throw ShapeError("synth: dimensions must be >= 16");
    if (cfg.t < 1) throw ShapeError("synth: t must be >= 1");

    Rng rng(splitmix64(splitmix64(cfg.seed) ^ (uint64_t)index));

    SynthInfo local;
    local.bg = {(float)rng.uniform(-1, 1), (float)rng.uniform(-1, 1),
                (float)rng.uniform(-1, 1)};
    const double mindim = (double)std::min(cfg.h, cfg.w);
    for (int s = 0; s < cfg.shapes_per_clip; ++s) {
        SynthShape sh;
        sh.ellipse = rng.uniform() < 0.5;
        sh.half_w = rng.uniform(0.10, 0.22) * mindim;
        sh.half_h = rng.uniform(0.10, 0.22) * mindim;
        sh.lo_x = sh.half_w;
        sh.hi_x = (double)cfg.w - sh.half_w;
        sh.lo_y = sh.half_h;
        sh.hi_y = (double)cfg.h - sh.half_h;
        sh.cx0 = rng.uniform(sh.lo_x, sh.hi_x);
        sh.cy0 = rng.uniform(sh.lo_y, sh.hi_y);
        sh.vx = rng.uniform(-cfg.velocity_range, cfg.velocity_range);
        sh.vy = rng.uniform(-cfg.velocity_range, cfg.velocity_range);
        // keep shapes clearly separable from the background
        for (int c = 0; c < 3; ++c) sh.color[(size_t)c] = (float)rng.uniform(-1, 1);
        int tries = 0;
        while (tries++ < 64) {
            double contrast = 0;
            for (int c = 0; c < 3; ++c)
                contrast = std::max(
                    contrast, std::abs((double)sh.color[(size_t)c] -
                                       (double)local.bg[(size_t)c]));
            if (contrast >= 0.8) break;
            for (int c = 0; c < 3; ++c)
                sh.color[(size_t)c] = (float)rng.uniform(-1, 1);
        }
        local.shapes.push_back(sh);
    }

    VideoClip clip;
    clip.frames = Tensor({cfg.t, cfg.h, cfg.w, 3});
    clip.source_id = "synth:" + std::to_string(cfg.seed) + ":" +
                     std::to_string(index);
    float* data = clip.frames.data();
    for (int64_t t = 0; t < cfg.t; ++t) {
        float* fr = data + t * cfg.h * cfg.w * 3;
        for (int64_t i = 0; i < cfg.h * cfg.w; ++i)
            for (int c = 0; c < 3; ++c) fr[i * 3 + c] = local.bg[(size_t)c];
        for (const SynthShape& sh : local.shapes) {
            double cx = 0, cy = 0;
            shape_center_at(sh, (double)t, &cx, &cy);
            const int64_t y0 =
                std::max<int64_t>(0, (int64_t)std::floor(cy - sh.half_h));
            const int64_t y1 =
                std::min(cfg.h - 1, (int64_t)std::ceil(cy + sh.half_h));
            const int64_t x0 =
                std::max<int64_t>(0, (int64_t)std::floor(cx - sh.half_w));
            const int64_t x1 =
                std::min(cfg.w - 1, (int64_t)std::ceil(cx + sh.half_w));
            for (int64_t y = y0; y <= y1; ++y)
                for (int64_t x = x0; x <= x1; ++x) {
                    const double dx = ((double)x + 0.5 - cx) / sh.half_w;
                    const double dy = ((double)y + 0.5 - cy) / sh.half_h;
                    const bool inside = sh.ellipse
                                            ? (dx * dx + dy * dy <= 1.0)
                                            : (std::abs(dx) <= 1.0 &&
                                               std::abs(dy) <= 1.0);
                    if (!inside) continue;
                    float* px = fr + (y * cfg.w + x) * 3;
                    for (int c = 0; c < 3; ++c) px[c] = sh.color[(size_t)c];
                }
        }
    }
    if (info) *info = std::move(local);
    return clip;
}

std::vector<VideoClip> synth_dataset(const SynthConfig& cfg) {
    std::vector<VideoClip> out((size_t)cfg.num_clips);
    // per-clip seeds derive from (seed, index), so clips are independent
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < cfg.num_clips; ++i)
        out[(size_t)i] = synth_clip(cfg, i);
    return out;
}

}  // namespace regen
