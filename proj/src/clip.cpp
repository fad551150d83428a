#include "regen/video/clip.hpp"

#include <algorithm>
#include <cmath>

namespace regen {

void validate_clip(const VideoClip& clip, bool require_div8) {
    if (clip.frames.ndim() != 4 || clip.frames.dim(3) != 3)
        throw ShapeError("clip must be [T,H,W,3], got " +
                         shape_str(clip.frames.shape));
    if (clip.t() < 1) throw ShapeError("clip must have T >= 1");
    if (clip.h() < 8 || clip.w() < 8)
        throw ShapeError("clip must be at least 8x8");
    if (require_div8 && (clip.h() % 8 != 0 || clip.w() % 8 != 0))
        throw ShapeError("H and W must be divisible by 8");
    for (int64_t i = 0; i < clip.frames.numel(); ++i) {
        const float v = clip.frames[i];
        if (!std::isfinite(v) || v < -1.0001f || v > 1.0001f)
            throw FormatError("clip values must be finite and in [-1, 1]");
    }
}

std::vector<VideoClip> chunk(const VideoClip& clip, const ChunkSpec& spec) {
    const int64_t len = spec.chunk_len();
    const int64_t T = clip.t();
    if (T <= 0 || T % len != 0) {
        const int64_t pad_to = ((T + len - 1) / len) * len;
        throw ChunkError("clip length " + std::to_string(T) +
                             " is not a multiple of chunk length " +
                             std::to_string(len) + "; pad to " +
                             std::to_string(pad_to) + " frames",
                         pad_to);
    }
    const int64_t n = T / len;
    const int64_t frame_elems = clip.h() * clip.w() * 3;
    std::vector<VideoClip> out((size_t)n);
    for (int64_t c = 0; c < n; ++c) {
        VideoClip& ck = out[(size_t)c];
        ck.frames = Tensor({len, clip.h(), clip.w(), 3});
        std::copy(clip.frames.data() + c * len * frame_elems,
                  clip.frames.data() + (c + 1) * len * frame_elems,
                  ck.frames.data());
        ck.frame_rate = clip.frame_rate;
        ck.source_id = clip.source_id + "#" + std::to_string(c);
    }
    return out;
}

VideoClip concat_clips(const std::vector<VideoClip>& chunks) {
    if (chunks.empty()) throw ShapeError("concat_clips: empty input");
    const int64_t H = chunks[0].h(), W = chunks[0].w();
    int64_t T = 0;
    for (const auto& c : chunks) {
        if (c.h() != H || c.w() != W)
            throw ShapeError("concat_clips: mixed dimensions");
        T += c.t();
    }
    VideoClip out;
    out.frames = Tensor({T, H, W, 3});
    out.frame_rate = chunks[0].frame_rate;
    out.source_id = chunks[0].source_id;
    int64_t off = 0;
    for (const auto& c : chunks) {
        std::copy(c.frames.data(), c.frames.data() + c.frames.numel(),
                  out.frames.data() + off);
        off += c.frames.numel();
    }
    return out;
}

namespace {

// Bilinear resize of one [H,W,3] frame, pixel-center convention.
void resize_frame(const float* src, int64_t sh, int64_t sw, float* dst,
                  int64_t dh, int64_t dw) {
    const double sy = (double)sh / (double)dh;
    const double sx = (double)sw / (double)dw;
    for (int64_t y = 0; y < dh; ++y) {
        const double fy = ((double)y + 0.5) * sy - 0.5;
        const int64_t y0 = std::clamp((int64_t)std::floor(fy), (int64_t)0, sh - 1);
        const int64_t y1 = std::min(y0 + 1, sh - 1);
        const double wy = std::clamp(fy - (double)y0, 0.0, 1.0);
        for (int64_t x = 0; x < dw; ++x) {
            const double fx = ((double)x + 0.5) * sx - 0.5;
            const int64_t x0 =
                std::clamp((int64_t)std::floor(fx), (int64_t)0, sw - 1);
            const int64_t x1 = std::min(x0 + 1, sw - 1);
            const double wx = std::clamp(fx - (double)x0, 0.0, 1.0);
            for (int64_t c = 0; c < 3; ++c) {
                const double v00 = src[(y0 * sw + x0) * 3 + c];
                const double v01 = src[(y0 * sw + x1) * 3 + c];
                const double v10 = src[(y1 * sw + x0) * 3 + c];
                const double v11 = src[(y1 * sw + x1) * 3 + c];
                const double v = v00 * (1 - wy) * (1 - wx) +
                                 v01 * (1 - wy) * wx + v10 * wy * (1 - wx) +
                                 v11 * wy * wx;
                dst[(y * dw + x) * 3 + c] = (float)std::clamp(v, -1.0, 1.0);
            }
        }
    }
}

}  // namespace

VideoClip preprocess(const VideoClip& clip, int64_t target_h,
                     int64_t target_w) {
    if (target_h % 8 != 0 || target_w % 8 != 0)
        throw ShapeError("preprocess: target dims must be divisible by 8");
    const int64_t T = clip.t(), H = clip.h(), W = clip.w();
    const double scale =
        std::max((double)target_h / (double)H, (double)target_w / (double)W);
    if (scale > 4.0)
        throw ShapeError("preprocess: upscale beyond 4x source refused");

    int64_t nh = H, nw = W;
    if (scale != 1.0) {
        nh = std::max(target_h, (int64_t)std::llround((double)H * scale));
        nw = std::max(target_w, (int64_t)std::llround((double)W * scale));
    }
    VideoClip out;
    out.frames = Tensor({T, target_h, target_w, 3});
    out.frame_rate = clip.frame_rate;
    out.source_id = clip.source_id;

    const int64_t y0 = (nh - target_h) / 2;
    const int64_t x0 = (nw - target_w) / 2;
    std::vector<float> scaled((size_t)(nh * nw * 3));
    for (int64_t t = 0; t < T; ++t) {
        const float* src = clip.frames.data() + t * H * W * 3;
        const float* plane = src;
        if (nh != H || nw != W) {
            resize_frame(src, H, W, scaled.data(), nh, nw);
            plane = scaled.data();
        }
        float* dst = out.frames.data() + t * target_h * target_w * 3;
        for (int64_t y = 0; y < target_h; ++y)
            std::copy(plane + ((y0 + y) * nw + x0) * 3,
                      plane + ((y0 + y) * nw + x0 + target_w) * 3,
                      dst + y * target_w * 3);
    }
    return out;
}

VideoClip frame_of(const VideoClip& clip, int64_t index) {
    VideoClip out;
    const int64_t fe = clip.h() * clip.w() * 3;
    out.frames = Tensor({1, clip.h(), clip.w(), 3});
    std::copy(clip.frames.data() + index * fe,
              clip.frames.data() + (index + 1) * fe, out.frames.data());
    out.frame_rate = clip.frame_rate;
    out.source_id = clip.source_id + "@" + std::to_string(index);
    return out;
}

}  // namespace regen
