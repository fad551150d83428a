#pragma once

// The full encoder-generator: causal encoder + latent conditioning + DiT
// denoiser, trained end-to-end with the epsilon-prediction objective.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regen/core/rng.hpp"
#include "regen/diffusion/schedule.hpp"
#include "regen/model/conditioning.hpp"
#include "regen/model/coords.hpp"
#include "regen/model/dit.hpp"
#include "regen/model/encoder.hpp"

namespace regen {

struct RegenConfig {
    int k = 4;
    EncoderConfig enc = default_encoder_config(4);
    SirenConfig siren;
    DecoderConfig dec;
    ScheduleKind sched_kind = ScheduleKind::cosine;
    int sched_steps = 1000;
    double alpha_min = 1e-3;
    int token_budget = 16384;
    bool replace_frame0 = true;
    uint64_t init_seed = 0;

    void validate() const {
        if (enc.k != k) throw ShapeError("config: enc.k must equal k");
        if (dec.patch_size != enc.m)
            throw ShapeError("config: patch size must equal spatial ratio m");
        enc.validate();
        siren.validate();
        dec.validate();
    }
};

template <class S>
struct RegenModel {
    RegenConfig cfg;
    Encoder<S> enc;
    Conditioning<S> cond;
    Dit<S> dit;
    NoiseSchedule sched;

    explicit RegenModel(const RegenConfig& c)
        : cfg(c),
          enc(c.enc),
          cond(c.siren, c.dec.d_model),
          dit(c.dec),
          sched(make_schedule(c.sched_kind, c.sched_steps, c.alpha_min)) {
        cfg.validate();
        cond.replace_frame0 = cfg.replace_frame0;
        Rng rng(splitmix64(cfg.init_seed ^ 0x5245474e));
        enc.init(rng);
        cond.init(rng);
        dit.init(rng);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        enc.collect(out);
        cond.collect(out);
        dit.collect(out);
    }

    std::vector<ParamT<S>*> params() {
        std::vector<ParamT<S>*> out;
        collect(out);
        return out;
    }

    // ------------------------------------------------------ graph pieces

    // Encode [T,H,W,3] into (z_c, z_m); z_m invalid for T == 1.
    std::pair<Var, Var> encode_vars(GraphT<S>& g, Var x) {
        const auto& X = g.val(x);
        const int64_t T = X.dim(0);
        if (T != 1 && T != cfg.k + 1)
            throw ShapeError("encode: chunk must have k+1 frames (or 1)");
        Var lat = enc.forward(g, x);  // [tL, h, w, 8]
        const auto& L = g.val(lat);
        const int64_t tl = L.dim(0), h = L.dim(1), w = L.dim(2);
        if (tl != (T == 1 ? 1 : 2))
            throw ShapeError("encode: unexpected latent frame count");
        Var flat = op_reshape(g, lat, {tl, h * w * kLatentChannels});
        Var z_c = op_reshape(g, op_slice_rows(g, flat, 0, 1),
                             {h, w, (int64_t)kLatentChannels});
        Var z_m{};
        if (tl == 2)
            z_m = op_reshape(g, op_slice_rows(g, flat, 1, 2),
                             {h, w, (int64_t)kLatentChannels});
        return {z_c, z_m};
    }

    // Eq. 4: || eps - eps_theta(x_target^t, [z_c, z_m]) ||^2 with t drawn
    // uniformly over schedule steps and eps ~ N(0, I). Differentiable
    // w.r.t. encoder, conditioning, and decoder parameters jointly.
    Var diffusion_loss(GraphT<S>& g, const TensorT<S>& x_input,
                       const TensorT<S>& x_target,
                       const std::vector<double>& coords, Rng& rng,
                       int* step_out = nullptr) {
        if ((int64_t)coords.size() != x_target.dim(0))
            throw ShapeError("loss: coords must match target length");
        Var x = g.leaf(x_input, false);
        auto [z_c, z_m] = encode_vars(g, x);
        Var z_e = cond.expand(g, z_c, z_m, coords);

        const int step = (int)rng.uniform_int(sched.num_steps);
        if (step_out) *step_out = step;
        TensorT<S> eps(x_target.shape);
        rng.fill_normal(eps);
        TensorT<S> x_t =
            forward_sample(x_target, sched.alpha[(size_t)step], eps);
        Var eps_hat =
            dit.denoise(g, g.leaf(std::move(x_t), false), sched.norm_time(step),
                        z_e);
        return op_mse(g, eps_hat, eps);
    }

    // --------------------------------------------------- inference (CPU)

    TensorT<S> expand_values(const TensorT<S>& z_c,
                             const TensorT<S>* z_m,
                             const std::vector<double>& coords) {
        GraphT<S> g(false);
        Var zc = g.leaf(z_c, false);
        Var zm{};
        if (z_m) zm = g.leaf(*z_m, false);
        return g.val(cond.expand(g, zc, zm, coords));
    }

    TensorT<S> denoise_values(const TensorT<S>& x_t, double t,
                              const TensorT<S>& z_e) {
        GraphT<S> g(false);
        return g.val(
            dit.denoise(g, g.leaf(x_t, false), t, g.leaf(z_e, false)));
    }

    TensorT<S> encode_values(const TensorT<S>& x, TensorT<S>* z_m_out) {
        GraphT<S> g(false);
        auto [z_c, z_m] = encode_vars(g, g.leaf(x, false));
        if (z_m_out && z_m.valid()) *z_m_out = g.val(z_m);
        return g.val(z_c);
    }
};

}  // namespace regen
