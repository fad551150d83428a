#pragma once

// Comparison models: a conventional feed-forward conv decoder paired with
// the causal encoder (trained with plain L2), and an in-context DiT variant
// that concatenates conditioning tokens along the sequence and keeps a
// fixed sinusoidal positional table; the resolution-generalization failure
// mode under test.

#include <string>
#include <vector>

#include "regen/core/rng.hpp"
#include "regen/diffusion/schedule.hpp"
#include "regen/model/dit.hpp"
#include "regen/model/encoder.hpp"
#include "regen/model/latent.hpp"

namespace regen {

struct ConvDecoderConfig {
    int base_channels = 32;
    std::vector<int> channel_multipliers = {4, 2, 1};  // coarse -> fine
    int blocks_per_stage = 1;
    int k = 4;
    int gn_groups = 8;
    double width_mult = 1.0;  // scaling-study knob

    int ch(int mult) const {
        return std::max(4, (int)std::lround(base_channels * width_mult) * mult);
    }

    // Per-stage (temporal, spatial) upsample factors. Spatial 2x on the
    // last three stages; temporal factors reach the smallest power of two
    // with 2 * prod >= k+1. At k=32 all temporal upsampling sits in the
    // last two stages to mirror the adjusted high-compression layout.
    std::vector<std::pair<int, int>> stages() const {
        int a = 0;
        while ((2 << a) < k + 2) ++a;  // 2*2^a >= k+1
        int n = std::max<int>(3, (int)channel_multipliers.size());
        if (k != 32) n = std::max(n, a);  // one x2 stage per factor
        std::vector<std::pair<int, int>> out((size_t)n, {1, 1});
        for (int i = n - 3; i < n; ++i) out[(size_t)i].second = 2;
        if (k == 32) {
            out[(size_t)(n - 2)].first = 8;
            out[(size_t)(n - 1)].first = 4;
        } else {
            for (int i = 0; i < a; ++i) out[(size_t)(n - 1 - i)].first = 2;
        }
        return out;
    }
};

// Nearest-neighbor upsample along (t, h, w).
template <class S>
Var op_upsample_nearest(GraphT<S>& g, Var x, int ut, int uh, int uw) {
    const auto& X = g.val(x);
    const int64_t T = X.dim(0), H = X.dim(1), W = X.dim(2), C = X.dim(3);
    const int64_t oT = T * ut, oH = H * uh, oW = W * uw;
    TensorT<S> out({oT, oH, oW, C});
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < oT; ++t)
        for (int64_t y = 0; y < oH; ++y)
            for (int64_t xx = 0; xx < oW; ++xx) {
                const S* src =
                    X.data() + (((t / ut) * H + y / uh) * W + xx / uw) * C;
                S* dst = out.data() + ((t * oH + y) * oW + xx) * C;
                for (int64_t c = 0; c < C; ++c) dst[c] = src[c];
            }
    Var o = g.push(std::move(out), g.any_needs({x}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(x)) return;
        const auto& go = gr.grad(o);
        TensorT<S> dx({T, H, W, C});
        for (int64_t t = 0; t < oT; ++t)
            for (int64_t y = 0; y < oH; ++y)
                for (int64_t xx = 0; xx < oW; ++xx) {
                    const S* src = go.data() + ((t * oH + y) * oW + xx) * C;
                    S* dst = dx.data() +
                             (((t / ut) * H + y / uh) * W + xx / uw) * C;
                    for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
                }
        gr.accum(x, dx);
    });
    return o;
}

// Keep the trailing `len` frames.
template <class S>
Var op_tail_frames(GraphT<S>& g, Var x, int64_t len) {
    const auto& X = g.val(x);
    const int64_t T = X.dim(0);
    if (len > T) throw ShapeError("tail_frames: too few frames");
    const int64_t fe = X.dim(1) * X.dim(2) * X.dim(3);
    TensorT<S> out({len, X.dim(1), X.dim(2), X.dim(3)});
    std::copy(X.data() + (T - len) * fe, X.data() + T * fe, out.data());
    Var o = g.push(std::move(out), g.any_needs({x}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(x)) return;
        const auto& go = gr.grad(o);
        auto& dx = gr.grad(x);
        for (int64_t i = 0; i < len * fe; ++i) dx[(T - len) * fe + i] += go[i];
    });
    return o;
}

template <class S>
struct ConvDecoder {
    ConvDecoderConfig cfg;
    Conv3dLayer<S> conv_in;
    struct Stage {
        int ut = 1, us = 1;
        Conv3dLayer<S> conv;
        std::vector<EncoderResBlock<S>> blocks;
    };
    std::vector<Stage> stages;
    GroupNormLayer<S> final_gn;
    Conv3dLayer<S> final_proj;

    explicit ConvDecoder(const ConvDecoderConfig& c,
                         const std::string& prefix = "convdec")
        : cfg(c) {
        auto ups = cfg.stages();
        std::vector<int> mults = cfg.channel_multipliers;
        while (mults.size() < ups.size()) mults.insert(mults.begin(), mults.front());
        int prev = cfg.ch(mults[0]);
        conv_in = Conv3dLayer<S>(prefix + ".conv_in", kLatentChannels, prev,
                                 kern::Conv3dDims{3, 3, 3, 1, 1, 1});
        for (size_t i = 0; i < ups.size(); ++i) {
            Stage st;
            st.ut = ups[i].first;
            st.us = ups[i].second;
            const int out_ch = cfg.ch(mults[i]);
            st.conv = Conv3dLayer<S>(prefix + ".stage" + std::to_string(i) +
                                         ".conv",
                                     prev, out_ch,
                                     kern::Conv3dDims{3, 3, 3, 1, 1, 1});
            for (int bl = 0; bl < cfg.blocks_per_stage; ++bl)
                st.blocks.emplace_back(prefix + ".stage" + std::to_string(i) +
                                           ".block" + std::to_string(bl),
                                       out_ch, cfg.gn_groups);
            stages.push_back(std::move(st));
            prev = out_ch;
        }
        final_gn = GroupNormLayer<S>(prefix + ".final_gn", prev, cfg.gn_groups);
        final_proj = Conv3dLayer<S>(prefix + ".final_proj", prev, 3,
                                    kern::Conv3dDims{3, 3, 3, 1, 1, 1});
    }

    void init(Rng& rng) {
        conv_in.init(rng);
        for (auto& st : stages) {
            st.conv.init(rng);
            for (auto& b : st.blocks) {
                b.c1.init(rng);
                b.c2.init(rng, 2.0 / (double)(2 * stages.size()));
            }
        }
        final_proj.init(rng, 1.0);
    }

    // latents [2, h, w, 8] -> frames [k+1, h*8, w*8, 3]
    Var forward(GraphT<S>& g, Var z) {
        Var h = conv_in.fwd(g, z);
        for (auto& st : stages) {
            if (st.ut > 1 || st.us > 1)
                h = op_upsample_nearest(g, h, st.ut, st.us, st.us);
            h = st.conv.fwd(g, h);
            for (auto& b : st.blocks) h = b.fwd(g, h);
        }
        h = op_silu(g, final_gn.fwd(g, h));
        h = final_proj.fwd(g, h);
        return op_tail_frames(g, h, cfg.k + 1);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        conv_in.collect(out);
        for (auto& st : stages) {
            st.conv.collect(out);
            for (auto& b : st.blocks) b.collect(out);
        }
        final_gn.collect(out);
        final_proj.collect(out);
    }
};

struct BaselineConfig {
    int k = 4;
    EncoderConfig enc = default_encoder_config(4);
    ConvDecoderConfig dec;
    uint64_t init_seed = 0;
};

// MAGVIT-v2-shaped encoder-decoder trained with plain L2 reconstruction.
template <class S>
struct BaselineModel {
    BaselineConfig cfg;
    Encoder<S> enc;
    ConvDecoder<S> dec;

    explicit BaselineModel(const BaselineConfig& c)
        : cfg(c), enc(c.enc), dec(c.dec, "convdec") {
        if (cfg.dec.k != cfg.k || cfg.enc.k != cfg.k)
            throw ShapeError("baseline: k mismatch in configs");
        Rng rng(splitmix64(cfg.init_seed ^ 0x42415345));
        enc.init(rng);
        dec.init(rng);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        enc.collect(out);
        dec.collect(out);
    }
    std::vector<ParamT<S>*> params() {
        std::vector<ParamT<S>*> out;
        collect(out);
        return out;
    }

    Var decode_var(GraphT<S>& g, Var lat) { return dec.forward(g, lat); }

    // L2 reconstruction loss on one chunk.
    Var recon_loss(GraphT<S>& g, const TensorT<S>& chunk) {
        Var x = g.leaf(chunk, false);
        Var lat = enc.forward(g, x);
        Var rec = dec.forward(g, lat);
        return op_mse(g, rec, chunk);
    }

    TensorT<S> encode_values(const TensorT<S>& x, TensorT<S>* z_m_out) {
        GraphT<S> g(false);
        Var lat = enc.forward(g, g.leaf(x, false));
        const auto& L = g.val(lat);
        const int64_t h = L.dim(1), w = L.dim(2);
        TensorT<S> z_c({h, w, (int64_t)kLatentChannels});
        std::copy(L.data(), L.data() + z_c.numel(), z_c.data());
        if (z_m_out && L.dim(0) == 2) {
            *z_m_out = TensorT<S>({h, w, (int64_t)kLatentChannels});
            std::copy(L.data() + z_c.numel(), L.data() + 2 * z_c.numel(),
                      z_m_out->data());
        }
        return z_c;
    }

    // Deterministic feed-forward reconstruction; consumes no rng.
    TensorT<S> decode_values(const LatentChunk& lat) {
        if (!lat.z_m) throw ShapeError("conv decoder needs both latent frames");
        GraphT<S> g(false);
        TensorT<S> z({2, lat.h(), lat.w(), (int64_t)kLatentChannels});
        std::copy(lat.z_c.data(), lat.z_c.data() + lat.z_c.numel(), z.data());
        std::copy(lat.z_m->data(), lat.z_m->data() + lat.z_m->numel(),
                  z.data() + lat.z_c.numel());
        return g.val(dec.forward(g, g.leaf(std::move(z), false)));
    }
};

// ------------------------------------------------------------ in-context

struct InContextConfig {
    int k = 4;
    EncoderConfig enc = default_encoder_config(4);
    DecoderConfig dec;
    // fixed sinusoidal PE table sized to the training grid
    int train_frames = 5;
    int train_gh = 8, train_gw = 8;
    bool allow_pe_interp = false;
    ScheduleKind sched_kind = ScheduleKind::cosine;
    int sched_steps = 1000;
    double alpha_min = 1e-3;
    uint64_t init_seed = 0;
};

// Separable fixed sinusoidal PE over (t, y, x), summed embeddings.
template <class S>
TensorT<S> make_pe_table(int T, int gh, int gw, int d) {
    TensorT<S> pe({(int64_t)T, (int64_t)gh, (int64_t)gw, (int64_t)d});
    auto axis = [&](double pos) { return timestep_sinusoid<S>(pos, d); };
    for (int t = 0; t < T; ++t) {
        const TensorT<S> et = axis(0.001 * t);
        for (int y = 0; y < gh; ++y) {
            const TensorT<S> ey = axis(0.001 * y + 0.207);
            for (int x = 0; x < gw; ++x) {
                const TensorT<S> ex = axis(0.001 * x + 0.414);
                S* dst = pe.data() + (((int64_t)t * gh + y) * gw + x) * d;
                for (int i = 0; i < d; ++i)
                    dst[i] = et[i] + ey[i] + ex[i];
            }
        }
    }
    return pe;
}

// DiT with in-context conditioning: latent tokens are projected, tagged
// with learned type embeddings, concatenated before the noisy tokens, and
// the whole sequence gets the fixed PE table added.
template <class S>
struct InContextModel {
    InContextConfig cfg;
    Encoder<S> enc;
    LinearLayer<S> patch_embed;
    LinearLayer<S> cond_proj;
    ParamT<S> cond_type;  // [2, d_model]
    LinearLayer<S> t_mlp1, t_mlp2;
    std::vector<DitBlock<S>> blocks;
    RmsNormLayer<S> final_norm;
    LinearLayer<S> head;
    TensorT<S> pe;  // fixed after construction
    NoiseSchedule sched;

    explicit InContextModel(const InContextConfig& c)
        : cfg(c),
          enc(c.enc),
          sched(make_schedule(c.sched_kind, c.sched_steps, c.alpha_min)) {
        cfg.dec.validate();
        const int pd = cfg.dec.patch_size * cfg.dec.patch_size * 3;
        patch_embed = LinearLayer<S>("ic.patch_embed", pd, cfg.dec.d_model);
        cond_proj =
            LinearLayer<S>("ic.cond_proj", kLatentChannels, cfg.dec.d_model);
        cond_type = ParamT<S>("ic.cond_type", {2, (int64_t)cfg.dec.d_model});
        t_mlp1 = LinearLayer<S>("ic.t_mlp1", cfg.dec.d_model, cfg.dec.d_model);
        t_mlp2 = LinearLayer<S>("ic.t_mlp2", cfg.dec.d_model, cfg.dec.d_model);
        for (int i = 0; i < cfg.dec.depth; ++i)
            blocks.emplace_back("ic.block" + std::to_string(i), cfg.dec);
        final_norm = RmsNormLayer<S>("ic.final_norm", cfg.dec.d_model);
        head = LinearLayer<S>("ic.head", cfg.dec.d_model, pd);
        pe = make_pe_table<S>(cfg.train_frames, cfg.train_gh, cfg.train_gw,
                              cfg.dec.d_model);
        Rng rng(splitmix64(cfg.init_seed ^ 0x494e4354));
        enc.init(rng);
        patch_embed.init(rng);
        cond_proj.init(rng);
        rng.fill_normal(cond_type.value);
        for (int64_t i = 0; i < cond_type.value.numel(); ++i)
            cond_type.value[i] = (S)((double)cond_type.value[i] * 0.02);
        t_mlp1.init(rng);
        t_mlp2.init(rng);
        for (auto& b : blocks) b.init(rng, cfg.dec.depth);
        head.zero_init();
    }

    void collect(std::vector<ParamT<S>*>& out) {
        enc.collect(out);
        patch_embed.collect(out);
        cond_proj.collect(out);
        out.push_back(&cond_type);
        t_mlp1.collect(out);
        t_mlp2.collect(out);
        for (auto& b : blocks) b.collect(out);
        final_norm.collect(out);
        head.collect(out);
    }
    std::vector<ParamT<S>*> params() {
        std::vector<ParamT<S>*> out;
        collect(out);
        return out;
    }

    // PE for a (T, gh, gw) grid; errors beyond the table unless spatial
    // interpolation is enabled (the documented failure path).
    TensorT<S> pe_for_grid(int64_t T, int64_t gh, int64_t gw) const {
        if (T > pe.dim(0))
            throw ShapeError("in-context: grid exceeds temporal PE table");
        if (gh == pe.dim(1) && gw == pe.dim(2)) {
            if (T == pe.dim(0)) return pe;
            TensorT<S> out({T, gh, gw, pe.dim(3)});
            std::copy(pe.data(), pe.data() + out.numel(), out.data());
            return out;
        }
        if (!cfg.allow_pe_interp)
            throw ShapeError(
                "in-context: unsupported resolution, grid exceeds the fixed "
                "PE table (enable pe interpolation to force)");
        // bilinear interpolation of the spatial planes
        TensorT<S> out({T, gh, gw, pe.dim(3)});
        const int64_t d = pe.dim(3), sh = pe.dim(1), sw = pe.dim(2);
        for (int64_t t = 0; t < T; ++t)
            for (int64_t y = 0; y < gh; ++y)
                for (int64_t x = 0; x < gw; ++x) {
                    const double fy =
                        ((double)y + 0.5) * (double)sh / (double)gh - 0.5;
                    const double fx =
                        ((double)x + 0.5) * (double)sw / (double)gw - 0.5;
                    const int64_t y0 = std::clamp((int64_t)std::floor(fy),
                                                  (int64_t)0, sh - 1);
                    const int64_t x0 = std::clamp((int64_t)std::floor(fx),
                                                  (int64_t)0, sw - 1);
                    const int64_t y1 = std::min(y0 + 1, sh - 1);
                    const int64_t x1 = std::min(x0 + 1, sw - 1);
                    const double wy = std::clamp(fy - (double)y0, 0.0, 1.0);
                    const double wx = std::clamp(fx - (double)x0, 0.0, 1.0);
                    for (int64_t c = 0; c < d; ++c) {
                        const auto at = [&](int64_t yy, int64_t xx) {
                            return (double)
                                pe[(((t % pe.dim(0)) * sh + yy) * sw + xx) * d +
                                   c];
                        };
                        out[((t * gh + y) * gw + x) * d + c] =
                            (S)(at(y0, x0) * (1 - wy) * (1 - wx) +
                                at(y0, x1) * (1 - wy) * wx +
                                at(y1, x0) * wy * (1 - wx) +
                                at(y1, x1) * wy * wx);
                    }
                }
        return out;
    }

    // Conditioning tokens concatenated along the sequence; fixed PE added.
    Var denoise(GraphT<S>& g, Var x_t, double t, Var z_c, Var z_m) {
        const Shape xs = g.val(x_t).shape;  // copy: ops may realloc the tape
        const int64_t p = cfg.dec.patch_size;
        const int64_t T = xs[0], H = xs[1], W = xs[2];
        const int64_t gh = H / p, gw = W / p;
        const int64_t d = cfg.dec.d_model;
        const int64_t P = g.val(z_c).dim(0) * g.val(z_c).dim(1);
        if (P != gh * gw)
            throw ShapeError("in-context: latent grid must match token grid");
        const TensorT<S> pe_grid = pe_for_grid(T, gh, gw);

        Var zc_tok = cond_proj.fwd(
            g, op_reshape(g, z_c, {P, (int64_t)kLatentChannels}));
        Var zm_tok = cond_proj.fwd(
            g, op_reshape(g, z_m, {P, (int64_t)kLatentChannels}));
        Var type = g.param(cond_type);
        zc_tok = op_add_rowvec(
            g, zc_tok, op_reshape(g, op_slice_rows(g, type, 0, 1), {d}));
        zm_tok = op_add_rowvec(
            g, zm_tok, op_reshape(g, op_slice_rows(g, type, 1, 2), {d}));
        // conditioning tokens reuse the first spatial PE plane
        TensorT<S> pe_cond({P, d});
        std::copy(pe_grid.data(), pe_grid.data() + P * d, pe_cond.data());
        zc_tok = op_add(g, zc_tok, g.leaf(pe_cond, false));
        zm_tok = op_add(g, zm_tok, g.leaf(pe_cond.clone(), false));

        Var s = patch_embed.fwd(g, op_patchify(g, x_t, p));
        s = op_add(g, s,
                   g.leaf(pe_grid.reshaped({T * gh * gw, d}).clone(), false));
        Var temb = t_mlp2.fwd(
            g, op_silu(g, t_mlp1.fwd(g, g.leaf(
                                            timestep_sinusoid<S>(t, (int)d),
                                            false))));
        s = op_add_rowvec(g, s, op_reshape(g, temb, {d}));
        Var seq = op_concat_rows(g, op_concat_rows(g, zc_tok, zm_tok), s);
        for (auto& b : blocks) seq = b.fwd(g, seq);
        Var outs = op_slice_rows(g, seq, 2 * P, 2 * P + T * gh * gw);
        Var out_tok = head.fwd(g, final_norm.fwd(g, outs));
        return op_unpatchify(g, out_tok, T, H, W, 3, p);
    }

    Var diffusion_loss(GraphT<S>& g, const TensorT<S>& chunk, Rng& rng) {
        Var x = g.leaf(chunk, false);
        Var lat = enc.forward(g, x);
        const auto& L = g.val(lat);
        const int64_t h = L.dim(1), w = L.dim(2);
        Var flat = op_reshape(g, lat, {2, h * w * kLatentChannels});
        Var z_c = op_reshape(g, op_slice_rows(g, flat, 0, 1),
                             {h, w, (int64_t)kLatentChannels});
        Var z_m = op_reshape(g, op_slice_rows(g, flat, 1, 2),
                             {h, w, (int64_t)kLatentChannels});
        const int step = (int)rng.uniform_int(sched.num_steps);
        TensorT<S> eps(chunk.shape);
        rng.fill_normal(eps);
        TensorT<S> x_t = forward_sample(chunk, sched.alpha[(size_t)step], eps);
        Var eps_hat = denoise(g, g.leaf(std::move(x_t), false),
                              sched.norm_time(step), z_c, z_m);
        return op_mse(g, eps_hat, eps);
    }

    TensorT<S> encode_values(const TensorT<S>& x, TensorT<S>* z_m_out) {
        GraphT<S> g(false);
        Var lat = enc.forward(g, g.leaf(x, false));
        const auto& L = g.val(lat);
        const int64_t h = L.dim(1), w = L.dim(2);
        TensorT<S> z_c({h, w, (int64_t)kLatentChannels});
        std::copy(L.data(), L.data() + z_c.numel(), z_c.data());
        if (z_m_out && L.dim(0) == 2) {
            *z_m_out = TensorT<S>({h, w, (int64_t)kLatentChannels});
            std::copy(L.data() + z_c.numel(), L.data() + 2 * z_c.numel(),
                      z_m_out->data());
        }
        return z_c;
    }

    TensorT<S> denoise_values(const TensorT<S>& x_t, double t,
                              const LatentChunk& lat) {
        GraphT<S> g(false);
        if (!lat.z_m) throw ShapeError("in-context: needs both latents");
        return g.val(denoise(g, g.leaf(x_t, false), t,
                             g.leaf(lat.z_c, false), g.leaf(*lat.z_m, false)));
    }
};

// DDIM reconstruction decode for the in-context variant (recon grid only:
// the fixed temporal PE has no notion of continuous coordinates).
inline Tensor incontext_decode_chunk(InContextModel<float>& m,
                                     const LatentChunk& lat, int n_steps,
                                     uint64_t seed) {
    const int k = m.cfg.k;
    const int64_t T = k + 1;
    const int64_t H = lat.h() * 8, W = lat.w() * 8;
    const auto taus = sampling_steps(m.sched, n_steps);
    Tensor x({T, H, W, 3});
    const int64_t fe = H * W * 3;
    for (int64_t t = 0; t < T; ++t) {
        Tensor frame({H, W, 3});
        const int64_t key =
            (int64_t)std::llround((double)t / (double)k * 1e6);
        fill_normal_keyed(frame, seed, key);
        std::copy(frame.data(), frame.data() + fe, x.data() + t * fe);
    }
    Tensor x0;
    for (size_t r = 0; r < taus.size(); ++r) {
        const double a = m.sched.alpha[(size_t)taus[r]];
        const Tensor eps_hat =
            m.denoise_values(x, m.sched.norm_time(taus[r]), lat);
        const double sa = std::sqrt(a), sb = std::sqrt(1.0 - a);
        x0 = Tensor(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i)
            x0[i] = (float)std::clamp(
                ((double)x[i] - sb * (double)eps_hat[i]) / sa, -1.5, 1.5);
        if (r + 1 < taus.size()) {
            const double an = m.sched.alpha[(size_t)taus[r + 1]];
            for (int64_t i = 0; i < x.numel(); ++i)
                x[i] = (float)(std::sqrt(an) * (double)x0[i] +
                               std::sqrt(1.0 - an) * (double)eps_hat[i]);
        }
    }
    for (int64_t i = 0; i < x0.numel(); ++i)
        x0[i] = std::clamp(x0[i], -1.f, 1.f);
    return x0;
}

}  // namespace regen
