#pragma once

// Shared parameterized layers for the encoder/decoder stacks.

#include <string>
#include <vector>

#include "regen/core/graph.hpp"
#include "regen/core/rng.hpp"

namespace regen {

inline int pick_gn_groups(int channels, int preferred = 8) {
    int g = std::min(preferred, channels);
    while (channels % g != 0) --g;
    return g;
}

template <class S>
struct LinearLayer {
    ParamT<S> w, b;

    LinearLayer() = default;
    LinearLayer(const std::string& name, int64_t din, int64_t dout)
        : w(name + ".w", {dout, din}), b(name + ".b", {dout}) {}

    void init(Rng& rng, double std_override = -1.0) {
        const double std =
            std_override > 0 ? std_override : 1.0 / std::sqrt((double)w.value.dim(1));
        for (int64_t i = 0; i < w.value.numel(); ++i)
            w.value[i] = (S)(rng.normal() * std);
        b.value.fill(S(0));
    }

    void zero_init() {
        w.value.fill(S(0));
        b.value.fill(S(0));
    }

    Var fwd(GraphT<S>& g, Var x) {
        return op_linear(g, x, g.param(w), g.param(b));
    }

    void collect(std::vector<ParamT<S>*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

template <class S>
struct Conv3dLayer {
    ParamT<S> w, b;
    kern::Conv3dDims dims;

    Conv3dLayer() = default;
    Conv3dLayer(const std::string& name, int64_t cin, int64_t cout,
                kern::Conv3dDims d)
        : w(name + ".w", {d.kt, d.kh, d.kw, cin, cout}),
          b(name + ".b", {cout}),
          dims(d) {}

    void init(Rng& rng, double gain = 2.0) {
        const double fan_in =
            (double)(dims.kt * dims.kh * dims.kw * w.value.dim(3));
        const double std = std::sqrt(gain / fan_in);
        for (int64_t i = 0; i < w.value.numel(); ++i)
            w.value[i] = (S)(rng.normal() * std);
        b.value.fill(S(0));
    }

    Var fwd(GraphT<S>& g, Var x) {
        return op_conv3d(g, x, g.param(w), g.param(b), dims);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

template <class S>
struct GroupNormLayer {
    ParamT<S> gamma, beta;
    int groups = 1;

    GroupNormLayer() = default;
    GroupNormLayer(const std::string& name, int channels, int preferred = 8)
        : gamma(name + ".gamma", {channels}),
          beta(name + ".beta", {channels}),
          groups(pick_gn_groups(channels, preferred)) {
        gamma.value.fill(S(1));
    }

    Var fwd(GraphT<S>& g, Var x) {
        return op_groupnorm(g, x, g.param(gamma), g.param(beta), groups);
    }

    void collect(std::vector<ParamT<S>*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

template <class S>
struct RmsNormLayer {
    ParamT<S> w;

    RmsNormLayer() = default;
    RmsNormLayer(const std::string& name, int64_t d) : w(name + ".w", {d}) {
        w.value.fill(S(1));
    }

    Var fwd(GraphT<S>& g, Var x) { return op_rmsnorm(g, x, g.param(w)); }

    void collect(std::vector<ParamT<S>*>& out) { out.push_back(&w); }
};

}  // namespace regen
