#pragma once

// Deterministic DDIM-style sampling (eta = 0), one-step included, plus
// SDEdit-style guided decoding for latent extension across chunk
// boundaries. Init noise is keyed per output frame coordinate, so the same
// (seed, t_f) always sees the same starting noise regardless of which other
// frames are in the request.

#include <cmath>
#include <vector>

#include "regen/core/rng.hpp"
#include "regen/diffusion/schedule.hpp"
#include "regen/error.hpp"
#include "regen/model/embedder.hpp"
#include "regen/model/regen_model.hpp"
#include "regen/video/clip.hpp"

namespace regen {

// Per-step noisy states of one designated frame, recorded right before each
// denoise call, plus the final decoded frame. Guides the next chunk.
struct SampleTrajectory {
    std::vector<int> steps;        // schedule indices, strictly decreasing
    std::vector<Tensor> states;    // [H,W,3] per step
    Tensor final_frame;            // [H,W,3], clamped to [-1,1]

    bool empty() const { return states.empty(); }
};

struct DecodeOptions {
    int n_steps = 1;
    uint64_t seed = 0;
    int64_t out_h = 0, out_w = 0;  // 0 = derive from latent grid (h*8, w*8)
};

namespace detail {

inline int64_t coord_noise_key(double t_f) {
    return (int64_t)std::llround(t_f * 1e6);
}

// Bilinear [h,w,c] -> [nh,nw,c]; the experimental --scale path.
inline Tensor resize_hw(const Tensor& x, int64_t nh, int64_t nw) {
    const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (nh == h && nw == w) return x;
    Tensor out({nh, nw, c});
    for (int64_t y = 0; y < nh; ++y) {
        const double fy =
            ((double)y + 0.5) * (double)h / (double)nh - 0.5;
        const int64_t y0 = std::clamp((int64_t)std::floor(fy), (int64_t)0, h - 1);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const double wy = std::clamp(fy - (double)y0, 0.0, 1.0);
        for (int64_t xx = 0; xx < nw; ++xx) {
            const double fx =
                ((double)xx + 0.5) * (double)w / (double)nw - 0.5;
            const int64_t x0 =
                std::clamp((int64_t)std::floor(fx), (int64_t)0, w - 1);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const double wx = std::clamp(fx - (double)x0, 0.0, 1.0);
            for (int64_t ch = 0; ch < c; ++ch) {
                const double v =
                    (double)x[(y0 * w + x0) * c + ch] * (1 - wy) * (1 - wx) +
                    (double)x[(y0 * w + x1) * c + ch] * (1 - wy) * wx +
                    (double)x[(y1 * w + x0) * c + ch] * wy * (1 - wx) +
                    (double)x[(y1 * w + x1) * c + ch] * wy * wx;
                out[(y * nw + xx) * c + ch] = (float)v;
            }
        }
    }
    return out;
}

inline void copy_frame(const Tensor& src_frames, int64_t t, Tensor& dst) {
    const int64_t fe = src_frames.dim(1) * src_frames.dim(2) * 3;
    dst = Tensor({src_frames.dim(1), src_frames.dim(2), 3});
    std::copy(src_frames.data() + t * fe, src_frames.data() + (t + 1) * fe,
              dst.data());
}

inline void paste_frame(Tensor& frames, int64_t t, const Tensor& src) {
    const int64_t fe = frames.dim(1) * frames.dim(2) * 3;
    std::copy(src.data(), src.data() + fe, frames.data() + t * fe);
}

}  // namespace detail

// Core DDIM loop. `anchor` (optional) overwrites frame `anchor_index`
// before every denoise call and pins it to the anchor's decoded frame at
// the end; `record_index` (if >= 0) captures that frame's trajectory.
inline Tensor sample_core(RegenModel<float>& model, const LatentChunk& lat,
                          const std::vector<double>& coords,
                          const DecodeOptions& opt,
                          const SampleTrajectory* anchor, int64_t anchor_index,
                          SampleTrajectory* record, int64_t record_index) {
    if (opt.n_steps < 1) throw ShapeError("sample: n_steps must be >= 1");
    if (coords.empty()) throw ShapeError("sample: empty coords");
    const int64_t T = (int64_t)coords.size();
    const int64_t out_h = opt.out_h > 0 ? opt.out_h : lat.h() * 8;
    const int64_t out_w = opt.out_w > 0 ? opt.out_w : lat.w() * 8;
    const int p = model.cfg.dec.patch_size;
    if (out_h % p != 0 || out_w % p != 0)
        throw ShapeError("sample: output dims must be divisible by patch size");
    const int64_t tokens = T * (out_h / p) * (out_w / p);
    if (tokens > model.cfg.token_budget)
        throw TokenBudgetError("decode request needs " +
                               std::to_string(tokens) + " tokens, budget is " +
                               std::to_string(model.cfg.token_budget));

    // latents resized only on the experimental scaled-decode path
    Tensor z_c = detail::resize_hw(lat.z_c, out_h / 8, out_w / 8);
    Tensor z_m_store;
    const Tensor* z_m = nullptr;
    if (lat.z_m) {
        z_m_store = detail::resize_hw(*lat.z_m, out_h / 8, out_w / 8);
        z_m = &z_m_store;
    }
    const Tensor z_e = model.expand_values(z_c, z_m, coords);

    const NoiseSchedule& sched = model.sched;
    const std::vector<int> taus = sampling_steps(sched, opt.n_steps);
    if (anchor) {
        if (anchor->empty())
            throw ShapeError("sample_guided: empty anchor trajectory");
        if (anchor->steps != taus)
            throw ShapeError(
                "sample_guided: anchor recorded at different schedule steps");
    }
    if (record) {
        record->steps = taus;
        record->states.clear();
    }

    // x^T ~ N(0, I), keyed by (seed, frame coordinate)
    Tensor x({T, out_h, out_w, 3});
    const int64_t fe = out_h * out_w * 3;
    for (int64_t t = 0; t < T; ++t) {
        Tensor frame({out_h, out_w, 3});
        fill_normal_keyed(frame, opt.seed, detail::coord_noise_key(coords[(size_t)t]));
        std::copy(frame.data(), frame.data() + fe, x.data() + t * fe);
    }

    Tensor x0;
    for (size_t r = 0; r < taus.size(); ++r) {
        const int step = taus[r];
        const double a = sched.alpha[(size_t)step];
        if (anchor) detail::paste_frame(x, anchor_index, anchor->states[r]);
        if (record) {
            Tensor slice;
            detail::copy_frame(x, record_index, slice);
            record->states.push_back(std::move(slice));
        }
        const Tensor eps_hat =
            model.denoise_values(x, sched.norm_time(step), z_e);
        const double sa = std::sqrt(a), sb = std::sqrt(1.0 - a);
        x0 = Tensor(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i)
            x0[i] = (float)std::clamp(
                ((double)x[i] - sb * (double)eps_hat[i]) / sa, -1.5, 1.5);
        if (r + 1 < taus.size()) {
            const double an = sched.alpha[(size_t)taus[r + 1]];
            const double san = std::sqrt(an), sbn = std::sqrt(1.0 - an);
            for (int64_t i = 0; i < x.numel(); ++i)
                x[i] = (float)(san * (double)x0[i] + sbn * (double)eps_hat[i]);
        }
    }
    for (int64_t i = 0; i < x0.numel(); ++i)
        x0[i] = std::clamp(x0[i], -1.f, 1.f);
    if (anchor) detail::paste_frame(x0, anchor_index, anchor->final_frame);
    if (record) detail::copy_frame(x0, record_index, record->final_frame);
    return x0;
}

// Plain decode of one chunk's latents at the given frame coordinates.
inline VideoClip sample(RegenModel<float>& model, const LatentChunk& lat,
                        const std::vector<double>& coords,
                        const DecodeOptions& opt,
                        SampleTrajectory* record = nullptr,
                        int64_t record_index = -1) {
    VideoClip out;
    out.frames = sample_core(model, lat, coords, opt, nullptr, -1, record,
                             record ? record_index : -1);
    return out;
}

// Latent-extension decode of a non-first chunk: coordinates are shifted by
// -1 frame and extended to k+2 frames so the first output frame overlaps
// the previous chunk's last frame; the anchor's per-step states are
// injected into that slot before each denoise.
inline VideoClip sample_guided(RegenModel<float>& model,
                               const LatentChunk& lat,
                               const SampleTrajectory& anchor,
                               const DecodeOptions& opt,
                               SampleTrajectory* record = nullptr) {
    const int k = model.cfg.k;
    std::vector<double> coords((size_t)k + 2);
    for (int i = 0; i <= k + 1; ++i)
        coords[(size_t)i] = (double)(i - 1) / (double)k;
    VideoClip out;
    out.frames = sample_core(model, lat, coords, opt, &anchor, 0, record,
                             (int64_t)k + 1);
    return out;
}

enum class SmoothMode { none, extend };

// Decode a latent sequence back to frames. SmoothMode::extend chains the
// per-chunk trajectories sequentially; none decodes chunks independently.
inline VideoClip decode_video(RegenModel<float>& model,
                              const std::vector<LatentChunk>& latents,
                              SmoothMode smooth, const DecodeOptions& opt) {
    const int k = model.cfg.k;
    std::vector<VideoClip> parts;
    if (smooth == SmoothMode::none) {
        for (const auto& lat : latents)
            parts.push_back(sample(model, lat, recon_coords(k), opt));
    } else {
        SampleTrajectory prev;
        for (size_t c = 0; c < latents.size(); ++c) {
            SampleTrajectory cur;
            if (c == 0) {
                parts.push_back(
                    sample(model, latents[c], recon_coords(k), opt, &cur, k));
            } else {
                VideoClip ext = sample_guided(model, latents[c], prev, opt, &cur);
                // drop the overlap frame duplicated from the previous chunk
                VideoClip trimmed;
                trimmed.frames = Tensor({(int64_t)k + 1, ext.h(), ext.w(), 3});
                const int64_t fe = ext.h() * ext.w() * 3;
                std::copy(ext.frames.data() + fe,
                          ext.frames.data() + (int64_t)(k + 2) * fe,
                          trimmed.frames.data());
                parts.push_back(std::move(trimmed));
            }
            prev = std::move(cur);
        }
    }
    return concat_clips(parts);
}

enum class RetargetMode { interp2x, extrap };

inline VideoClip retarget_chunk(RegenModel<float>& model,
                                const LatentChunk& lat, RetargetMode mode,
                                int shift, const DecodeOptions& opt) {
    const int k = model.cfg.k;
    if (mode == RetargetMode::extrap && std::abs(shift) > k)
        throw ShiftError("retarget: |shift| must be <= k");
    const std::vector<double> coords = mode == RetargetMode::interp2x
                                           ? interp_coords(k, 2)
                                           : shifted_coords(k, shift);
    return sample(model, lat, coords, opt);
}

}  // namespace regen
