#pragma once

// Shared helpers for the model test suites.

#include "regen/core/rng.hpp"
#include "regen/model/regen_model.hpp"
#include "regen/video/synth.hpp"

namespace regen::testutil {

// Small-but-real config: fast on CPU, all paths exercised.
inline RegenConfig tiny_config(int k = 4) {
    RegenConfig cfg;
    cfg.k = k;
    cfg.enc = default_encoder_config(k, /*base_channels=*/8);
    cfg.enc.gn_groups = 4;
    cfg.siren.depth = 2;
    cfg.siren.hidden_dim = 16;
    cfg.dec.depth = 2;
    cfg.dec.heads = 2;
    cfg.dec.d_model = 32;
    cfg.dec.mlp_ratio = 2.0;
    cfg.sched_steps = 100;
    return cfg;
}

// Give every parameter (including zero-inited heads) a generic value.
template <class M>
void randomize(M& model, uint64_t seed, double std = 0.1) {
    Rng rng(seed);
    for (auto* p : model.params())
        for (int64_t i = 0; i < p->value.numel(); ++i)
            p->value[i] = (float)(rng.normal() * std);
}

inline VideoClip random_clip(uint64_t seed, int64_t t, int64_t h, int64_t w) {
    VideoClip c;
    c.frames = Tensor({t, h, w, 3});
    Rng rng(seed);
    rng.fill_uniform(c.frames, -1.0, 1.0);
    c.source_id = "rand";
    return c;
}

}  // namespace regen::testutil
