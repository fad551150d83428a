#pragma once

// Pixel-space diffusion-transformer denoiser. Patchifies the noisy target,
// adds the expanded latent z_e and the diffusion-timestep embedding to the
// token stream, runs pre-norm blocks with full spatiotemporal self-attention,
// and projects back to patches. No positional table of any kind: all
// position information arrives through z_e, which is what lets one set of
// weights decode any resolution.

#include <string>
#include <vector>

#include "regen/model/layers.hpp"

namespace regen {

struct DecoderConfig {
    int depth = 8;
    int heads = 4;
    int d_model = 256;
    int patch_size = 8;  // matches the encoder's spatial factor
    double mlp_ratio = 4.0;

    void validate() const {
        if (d_model % heads != 0)
            throw ShapeError("decoder: d_model must divide by heads");
        if (d_model % 2 != 0)
            throw ShapeError("decoder: d_model must be even");
        if (patch_size < 1) throw ShapeError("decoder: bad patch size");
    }
    int mlp_dim() const { return (int)(d_model * mlp_ratio); }
};

// Sinusoidal features of a diffusion time in [0,1] (host-side, no params).
template <class S>
TensorT<S> timestep_sinusoid(double t, int d_model) {
    TensorT<S> out({1, d_model});
    const int half = d_model / 2;
    const double pos = t * 1000.0;
    for (int i = 0; i < half; ++i) {
        const double freq =
            std::exp(-std::log(10000.0) * (double)i / (double)half);
        out[i] = (S)std::sin(pos * freq);
        out[half + i] = (S)std::cos(pos * freq);
    }
    return out;
}

template <class S>
struct DitBlock {
    RmsNormLayer<S> norm1, norm2;
    LinearLayer<S> qkv, attn_out;
    LinearLayer<S> mlp_in, mlp_out;
    int heads = 4;

    DitBlock() = default;
    DitBlock(const std::string& name, const DecoderConfig& cfg)
        : norm1(name + ".norm1", cfg.d_model),
          norm2(name + ".norm2", cfg.d_model),
          qkv(name + ".qkv", cfg.d_model, 3 * cfg.d_model),
          attn_out(name + ".attn_out", cfg.d_model, cfg.d_model),
          mlp_in(name + ".mlp_in", cfg.d_model, cfg.mlp_dim()),
          mlp_out(name + ".mlp_out", cfg.mlp_dim(), cfg.d_model),
          heads(cfg.heads) {}

    void init(Rng& rng, int depth) {
        qkv.init(rng);
        mlp_in.init(rng);
        // residual branches scaled down with depth
        const double res = 1.0 / std::sqrt(2.0 * (double)depth);
        attn_out.init(rng, res / std::sqrt((double)qkv.w.value.dim(1) / 3));
        mlp_out.init(rng, res / std::sqrt((double)mlp_out.w.value.dim(1)));
    }

    Var fwd(GraphT<S>& g, Var x) {
        const int64_t d = g.val(x).dim(1);
        Var a = qkv.fwd(g, norm1.fwd(g, x));
        Var q = op_slice_cols(g, a, 0, d);
        Var k = op_slice_cols(g, a, d, 2 * d);
        Var v = op_slice_cols(g, a, 2 * d, 3 * d);
        Var att = op_attention(g, q, k, v, heads);
        x = op_add(g, x, attn_out.fwd(g, att));
        Var m = op_gelu(g, mlp_in.fwd(g, norm2.fwd(g, x)));
        x = op_add(g, x, mlp_out.fwd(g, m));
        return x;
    }

    void collect(std::vector<ParamT<S>*>& out) {
        norm1.collect(out);
        norm2.collect(out);
        qkv.collect(out);
        attn_out.collect(out);
        mlp_in.collect(out);
        mlp_out.collect(out);
    }
};

template <class S>
struct Dit {
    DecoderConfig cfg;
    LinearLayer<S> patch_embed;        // p*p*3 -> d_model
    LinearLayer<S> t_mlp1, t_mlp2;     // timestep embedding MLP
    std::vector<DitBlock<S>> blocks;
    RmsNormLayer<S> final_norm;
    LinearLayer<S> head;               // d_model -> p*p*3, zero-init

    explicit Dit(const DecoderConfig& c, const std::string& prefix = "dit")
        : cfg(c) {
        cfg.validate();
        const int pd = cfg.patch_size * cfg.patch_size * 3;
        patch_embed = LinearLayer<S>(prefix + ".patch_embed", pd, cfg.d_model);
        t_mlp1 = LinearLayer<S>(prefix + ".t_mlp1", cfg.d_model, cfg.d_model);
        t_mlp2 = LinearLayer<S>(prefix + ".t_mlp2", cfg.d_model, cfg.d_model);
        for (int i = 0; i < cfg.depth; ++i)
            blocks.emplace_back(prefix + ".block" + std::to_string(i), cfg);
        final_norm = RmsNormLayer<S>(prefix + ".final_norm", cfg.d_model);
        head = LinearLayer<S>(prefix + ".head", cfg.d_model, pd);
    }

    void init(Rng& rng) {
        patch_embed.init(rng);
        t_mlp1.init(rng);
        t_mlp2.init(rng);
        for (auto& b : blocks) b.init(rng, cfg.depth);
        head.zero_init();
    }

    // Timestep embedding operation: sinusoid + 2-layer MLP, [1, d_model].
    Var timestep_embedding(GraphT<S>& g, double t) {
        if (t < 0.0 || t > 1.0)
            throw ShapeError("timestep_embedding: t must be in [0,1]");
        Var u = g.leaf(timestep_sinusoid<S>(t, cfg.d_model), false);
        return t_mlp2.fwd(g, op_silu(g, t_mlp1.fwd(g, u)));
    }

    // x_t: [T,H,W,3] noisy frames; z_e: [T, H/p, W/p, d_model].
    Var denoise(GraphT<S>& g, Var x_t, double t, Var z_e) {
        const Shape xs = g.val(x_t).shape;  // copy: ops may realloc the tape
        const Shape zs = g.val(z_e).shape;
        const int64_t p = cfg.patch_size;
        if (xs.size() != 4 || xs[3] != 3)
            throw ShapeError("denoise: x_t must be [T,H,W,3]");
        if (xs[1] % p != 0 || xs[2] % p != 0)
            throw ShapeError("denoise: H, W must be divisible by patch size");
        const int64_t T = xs[0], H = xs[1], W = xs[2];
        const int64_t gh = H / p, gw = W / p;
        if (zs.size() != 4 || zs[0] != T || zs[1] != gh || zs[2] != gw ||
            zs[3] != cfg.d_model)
            throw ShapeError("denoise: z_e grid " + shape_str(zs) +
                             " does not match token grid [" +
                             std::to_string(T) + "," + std::to_string(gh) +
                             "," + std::to_string(gw) + "," +
                             std::to_string(cfg.d_model) + "]");
        const int64_t N = T * gh * gw;

        Var tok = op_patchify(g, x_t, p);
        Var s = patch_embed.fwd(g, tok);
        s = op_add(g, s, op_reshape(g, z_e, {N, (int64_t)cfg.d_model}));
        Var temb = timestep_embedding(g, t);
        s = op_add_rowvec(g, s, op_reshape(g, temb, {(int64_t)cfg.d_model}));
        for (auto& b : blocks) s = b.fwd(g, s);
        Var out_tok = head.fwd(g, final_norm.fwd(g, s));
        return op_unpatchify(g, out_tok, T, H, W, 3, p);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        patch_embed.collect(out);
        t_mlp1.collect(out);
        t_mlp2.collect(out);
        for (auto& b : blocks) b.collect(out);
        final_norm.collect(out);
        head.collect(out);
    }
};

}  // namespace regen
