#pragma once

// Latent expansion module C_e: maps token coordinates (x, y, t_f) plus
// (z_c, z_m) to the expanded latent z_e, the content-aware positional
// embedding consumed by the decoder.
//
//   z_e(x,y,t) = M_s( c_branch(x,y,t) ++ M_t(t | z_m(x,y)) )
//
// M_t is a SIREN over the scalar frame-time coordinate, FiLM-modulated per
// spatial position by z_m; M_s is a single linear layer followed by
// RMSNorm. For video inputs the content branch at t = 0 is a learned linear
// projection of M_t(0 | z_m) instead of z_c (first-frame replacement); for
// image inputs the content branch is z_c and z_m is a learned null vector.

#include <cmath>
#include <string>
#include <vector>

#include "regen/model/latent.hpp"
#include "regen/model/layers.hpp"

namespace regen {

struct SirenConfig {
    int depth = 4;        // number of sin layers, >= 2
    int hidden_dim = 128;
    double omega0 = 30.0;
    std::string modulation = "film";

    void validate() const {
        if (depth < 2) throw ShapeError("siren: depth must be >= 2");
        if (omega0 <= 0) throw ShapeError("siren: omega0 must be > 0");
        if (modulation != "film")
            throw ShapeError("siren: unsupported modulation " + modulation);
    }
};

template <class S>
struct Conditioning {
    SirenConfig cfg;
    int d_model = 256;
    bool replace_frame0 = true;

    std::vector<LinearLayer<S>> siren;      // depth layers
    std::vector<LinearLayer<S>> film;       // depth maps: 8 -> 2*hidden
    LinearLayer<S> frame0_proj;             // hidden -> 8
    LinearLayer<S> proj;                    // (8+hidden) -> d_model (M_s)
    RmsNormLayer<S> proj_norm;
    ParamT<S> null_motion;                  // [1, 8]

    Conditioning(const SirenConfig& c, int d_model_,
                 const std::string& prefix = "cond")
        : cfg(c), d_model(d_model_) {
        cfg.validate();
        for (int l = 0; l < cfg.depth; ++l) {
            siren.emplace_back(prefix + ".siren" + std::to_string(l),
                               l == 0 ? 1 : cfg.hidden_dim, cfg.hidden_dim);
            film.emplace_back(prefix + ".film" + std::to_string(l),
                              kLatentChannels, 2 * cfg.hidden_dim);
        }
        frame0_proj = LinearLayer<S>(prefix + ".frame0_proj", cfg.hidden_dim,
                                     kLatentChannels);
        proj = LinearLayer<S>(prefix + ".proj",
                              kLatentChannels + cfg.hidden_dim, d_model);
        proj_norm = RmsNormLayer<S>(prefix + ".proj_norm", d_model);
        null_motion = ParamT<S>(prefix + ".null_motion", {1, kLatentChannels});
    }

    void init(Rng& rng) {
        // standard SIREN init: first layer U(-1/in, 1/in), hidden layers
        // U(-sqrt(6/in)/w0, +), with y = sin(w0 * (Wx + b)) at every layer
        for (int l = 0; l < cfg.depth; ++l) {
            auto& lay = siren[(size_t)l];
            const double fan_in = (double)lay.w.value.dim(1);
            const double bound = l == 0
                                     ? 1.0 / fan_in
                                     : std::sqrt(6.0 / fan_in) / cfg.omega0;
            rng.fill_uniform(lay.w.value, -bound, bound);
            rng.fill_uniform(lay.b.value, -bound, bound);
            film[(size_t)l].zero_init();  // modulation starts at identity
        }
        frame0_proj.init(rng);
        proj.init(rng);
        // null_motion starts at zero
    }

    // Time branch over all (coord, position) pairs. zm_tok: [P, 8].
    // Returns [T*P, hidden]; row t*P+p is M_t(coords[t] | z_m at p).
    Var time_features(GraphT<S>& g, const std::vector<double>& coords,
                      Var zm_tok, int64_t P) {
        const int64_t T = (int64_t)coords.size();
        TensorT<S> tcoord({T, 1});
        for (int64_t t = 0; t < T; ++t) tcoord[t] = (S)coords[(size_t)t];
        Var u = g.leaf(std::move(tcoord), false);
        Var h{};
        for (int l = 0; l < cfg.depth; ++l) {
            Var lin = siren[(size_t)l].fwd(g, l == 0 ? u : h);
            Var act = op_sin(g, op_scale(g, lin, cfg.omega0));
            if (l == 0) act = op_repeat_rows(g, act, P);  // [T*P, hidden]
            Var gb = film[(size_t)l].fwd(g, zm_tok);      // [P, 2*hidden]
            Var gamma = op_slice_cols(g, gb, 0, cfg.hidden_dim);
            Var beta = op_slice_cols(g, gb, cfg.hidden_dim, 2 * cfg.hidden_dim);
            h = op_film(g, act, gamma, beta, P);
        }
        return h;
    }

    // z_c: [h,w,8]; z_m: [h,w,8] or invalid for image inputs. Returns
    // z_e as [T_out, h, w, d_model].
    Var expand(GraphT<S>& g, Var z_c, Var z_m,
               const std::vector<double>& coords) {
        if (coords.empty()) throw ShapeError("expand_latent: empty coords");
        const Shape zc_shape = g.val(z_c).shape;  // copy: ops may realloc
        if (zc_shape.size() != 3 || zc_shape[2] != kLatentChannels)
            throw ShapeError("expand_latent: z_c must be [h,w,8]");
        const int64_t h = zc_shape[0], w = zc_shape[1], P = h * w;
        const int64_t T = (int64_t)coords.size();
        const bool image_mode = !z_m.valid();
        if (!image_mode && g.val(z_m).shape != zc_shape)
            throw ShapeError("expand_latent: z_m shape mismatch");

        Var zc_tok = op_reshape(g, z_c, {P, (int64_t)kLatentChannels});
        Var zm_tok;
        if (image_mode) {
            zm_tok = op_tile_rows(g, g.param(null_motion), P);
        } else {
            zm_tok = op_reshape(g, z_m, {P, (int64_t)kLatentChannels});
        }

        Var tfeat = time_features(g, coords, zm_tok, P);  // [T*P, hidden]
        Var content = op_tile_rows(g, zc_tok, T);         // [T*P, 8]
        if (!image_mode && replace_frame0) {
            for (int64_t t = 0; t < T; ++t) {
                if (std::abs(coords[(size_t)t]) > 1e-12) continue;
                Var f0 = op_slice_rows(g, tfeat, t * P, (t + 1) * P);
                Var repl = frame0_proj.fwd(g, f0);
                content = op_replace_rows(g, content, repl, t * P);
            }
        }
        Var cat = op_concat_cols(g, content, tfeat);
        Var z_e = proj_norm.fwd(g, proj.fwd(g, cat));
        return op_reshape(g, z_e, {T, h, w, (int64_t)d_model});
    }

    // Single-position time feature (for tests): returns [1, hidden].
    Var siren_time_feature(GraphT<S>& g, double t_f, Var zm_vec) {
        return time_features(g, {t_f}, zm_vec, 1);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        for (auto& l : siren) l.collect(out);
        for (auto& l : film) l.collect(out);
        frame0_proj.collect(out);
        proj.collect(out);
        proj_norm.collect(out);
        out.push_back(&null_motion);
    }
};

}  // namespace regen
