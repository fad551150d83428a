#pragma once

// Causal spatiotemporal convolutional encoder: maps a (k+1)-frame chunk to
// two 8-channel latent maps (z_c, z_m). All convolutions are causal along
// time (left replicate padding), so the first latent frame depends only on
// the chunk's first frame and a single frame is a valid input.

#include <string>
#include <vector>

#include "regen/model/latent.hpp"
#include "regen/model/layers.hpp"
#include "regen/video/clip.hpp"

namespace regen {

struct EncoderStageSpec {
    int mult = 1;
    int st = 1, sh = 1, sw = 1;  // downsample strides, each 1 or 2
};

struct EncoderConfig {
    int base_channels = 32;
    std::vector<int> channel_multipliers = {1, 2, 4};
    int blocks_per_stage = 1;
    int k = 4;
    int m = 8;
    int gn_groups = 8;

    // Stage strides: three spatial-stride-2 stages give the fixed 8x
    // spatial factor; log2(k) temporal-stride-2 stages (appended with the
    // last multiplier when k needs more stages than multipliers).
    std::vector<EncoderStageSpec> stages() const {
        int t_needed = 0;
        for (int v = k; v > 1; v /= 2) ++t_needed;
        std::vector<int> mults = channel_multipliers;
        while ((int)mults.size() < std::max(t_needed, 3))
            mults.push_back(mults.back());
        const int n = (int)mults.size();
        std::vector<EncoderStageSpec> out((size_t)n);
        for (int i = 0; i < n; ++i) {
            out[(size_t)i].mult = mults[(size_t)i];
            out[(size_t)i].sh = out[(size_t)i].sw = (i < 3) ? 2 : 1;
            out[(size_t)i].st = (i >= n - t_needed) ? 2 : 1;
        }
        return out;
    }

    void validate() const {
        if (!valid_k(k)) throw ShapeError("encoder: k must be in {4,8,16,32}");
        if (m != 8) throw ShapeError("encoder: m is fixed at 8");
        int sp = 1, tp = 1;
        for (const auto& s : stages()) {
            sp *= s.sh;
            tp *= s.st;
        }
        if (sp != 8) throw ShapeError("encoder: spatial stride product != 8");
        if (tp != k) throw ShapeError("encoder: temporal stride product != k");
    }
};

inline EncoderConfig default_encoder_config(int k, int base_channels = 32) {
    EncoderConfig cfg;
    cfg.k = k;
    cfg.base_channels = base_channels;
    cfg.channel_multipliers =
        (k == 4) ? std::vector<int>{1, 2, 4} : std::vector<int>{1, 2, 4, 4};
    return cfg;
}

template <class S>
struct EncoderResBlock {
    GroupNormLayer<S> gn1, gn2;
    Conv3dLayer<S> c1, c2;

    EncoderResBlock() = default;
    EncoderResBlock(const std::string& name, int ch, int gn_groups)
        : gn1(name + ".gn1", ch, gn_groups),
          gn2(name + ".gn2", ch, gn_groups),
          c1(name + ".c1", ch, ch, kern::Conv3dDims{3, 3, 3, 1, 1, 1}),
          c2(name + ".c2", ch, ch, kern::Conv3dDims{3, 3, 3, 1, 1, 1}) {}

    Var fwd(GraphT<S>& g, Var x) {
        Var h = c1.fwd(g, op_silu(g, gn1.fwd(g, x)));
        h = c2.fwd(g, op_silu(g, gn2.fwd(g, h)));
        return op_add(g, x, h);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        gn1.collect(out);
        gn2.collect(out);
        c1.collect(out);
        c2.collect(out);
    }
};

template <class S>
struct Encoder {
    EncoderConfig cfg;
    Conv3dLayer<S> conv_in;
    struct Stage {
        Conv3dLayer<S> down;
        std::vector<EncoderResBlock<S>> blocks;
    };
    std::vector<Stage> stages;
    GroupNormLayer<S> final_gn;
    Conv3dLayer<S> final_proj;  // 1x1x1 to 8 channels, no activation

    explicit Encoder(const EncoderConfig& c, const std::string& prefix = "enc")
        : cfg(c) {
        cfg.validate();
        const auto specs = cfg.stages();
        int ch = cfg.base_channels;
        conv_in = Conv3dLayer<S>(prefix + ".conv_in", 3, ch,
                                 kern::Conv3dDims{3, 3, 3, 1, 1, 1});
        int prev = ch;
        for (size_t i = 0; i < specs.size(); ++i) {
            Stage st;
            const int out_ch = cfg.base_channels * specs[i].mult;
            st.down = Conv3dLayer<S>(
                prefix + ".stage" + std::to_string(i) + ".down", prev, out_ch,
                kern::Conv3dDims{3, 3, 3, specs[i].st, specs[i].sh,
                                 specs[i].sw});
            for (int bl = 0; bl < cfg.blocks_per_stage; ++bl)
                st.blocks.emplace_back(prefix + ".stage" + std::to_string(i) +
                                           ".block" + std::to_string(bl),
                                       out_ch, cfg.gn_groups);
            stages.push_back(std::move(st));
            prev = out_ch;
        }
        final_gn = GroupNormLayer<S>(prefix + ".final_gn", prev, cfg.gn_groups);
        final_proj = Conv3dLayer<S>(prefix + ".final_proj", prev,
                                    kLatentChannels,
                                    kern::Conv3dDims{1, 1, 1, 1, 1, 1});
    }

    void init(Rng& rng) {
        conv_in.init(rng);
        for (auto& st : stages) {
            st.down.init(rng);
            for (auto& b : st.blocks) {
                b.c1.init(rng);
                b.c2.init(rng, 2.0 / (double)(2 * stages.size()));
            }
        }
        final_proj.init(rng, 1.0);
    }

    // x: [T,H,W,3] -> latent frames [tL, H/8, W/8, 8]; tL = 1 + (T-1)/k.
    Var forward(GraphT<S>& g, Var x) {
        const auto& X = g.val(x);
        if (X.ndim() != 4 || X.dim(3) != 3)
            throw ShapeError("encoder: input must be [T,H,W,3]");
        if (X.dim(1) % 8 != 0 || X.dim(2) % 8 != 0)
            throw ShapeError("encoder: H and W must be divisible by 8");
        Var h = conv_in.fwd(g, x);
        for (auto& st : stages) {
            h = st.down.fwd(g, h);
            for (auto& b : st.blocks) h = b.fwd(g, h);
        }
        h = op_silu(g, final_gn.fwd(g, h));
        return final_proj.fwd(g, h);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        conv_in.collect(out);
        for (auto& st : stages) {
            st.down.collect(out);
            for (auto& b : st.blocks) b.collect(out);
        }
        final_gn.collect(out);
        final_proj.collect(out);
    }
};

}  // namespace regen
