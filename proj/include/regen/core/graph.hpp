#pragma once

// Tape-based reverse-mode autodiff over TensorT<S>. Ops append nodes to a
// GraphT; backward() walks the tape in reverse. Leaves created from a
// ParamT share its grad buffer, so gradients accumulate straight into the
// parameter. Construct the graph with recording=false for inference: ops
// then compute values only and keep no backward closures or saved state.

#include <cassert>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "regen/core/kernels.hpp"
#include "regen/core/tensor.hpp"

namespace regen {

template <class S>
struct ParamT {
    std::string name;
    TensorT<S> value;
    TensorT<S> grad;
    // Adam state, lazily allocated by the optimizer.
    TensorT<S> adam_m, adam_v;

    ParamT() = default;
    ParamT(std::string n, Shape sh)
        : name(std::move(n)), value(sh), grad(std::move(sh)) {}

    void zero_grad() { grad.fill(S(0)); }
};

using Param = ParamT<float>;

struct Var {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

template <class S>
class GraphT {
public:
    explicit GraphT(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    struct Node {
        TensorT<S> val;
        TensorT<S> grad;  // lazily allocated; pre-bound for params
        bool needs = false;
        std::function<void(GraphT&)> back;
    };

    Var leaf(TensorT<S> v, bool needs_grad = false) {
        return push(std::move(v), needs_grad && recording_);
    }

    Var param(ParamT<S>& p) {
        Var v = push(p.value, recording_);
        if (recording_) nodes_[(size_t)v.id].grad = p.grad;  // shared store
        return v;
    }

    Var push(TensorT<S> v, bool needs) {
        nodes_.push_back(Node{std::move(v), {}, needs, nullptr});
        return Var{(int32_t)nodes_.size() - 1};
    }

    void set_back(Var v, std::function<void(GraphT&)> fn) {
        if (recording_ && nodes_[(size_t)v.id].needs)
            nodes_[(size_t)v.id].back = std::move(fn);
    }

    TensorT<S>& val(Var v) { return nodes_[(size_t)v.id].val; }
    const TensorT<S>& val(Var v) const { return nodes_[(size_t)v.id].val; }
    bool needs(Var v) const { return nodes_[(size_t)v.id].needs; }
    bool any_needs(std::initializer_list<Var> vs) const {
        for (Var v : vs)
            if (v.valid() && needs(v)) return true;
        return false;
    }

    // Gradient tensor of v, allocating zeros on first touch.
    TensorT<S>& grad(Var v) {
        Node& n = nodes_[(size_t)v.id];
        if (!n.grad.defined()) n.grad = TensorT<S>(n.val.shape);
        return n.grad;
    }

    bool has_grad(Var v) const { return nodes_[(size_t)v.id].grad.defined(); }

    // grad(v) += g (elementwise by flat index; shapes may differ in layout
    // but must match in numel; used by reshape).
    void accum(Var v, const TensorT<S>& g) {
        if (!nodes_[(size_t)v.id].needs) return;
        TensorT<S>& dst = grad(v);
        assert(dst.numel() == g.numel());
        S* dp = dst.data();
        const S* gp = g.data();
        const int64_t n = g.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
        for (int64_t i = 0; i < n; ++i) dp[i] += gp[i];
    }

    void backward(Var loss) {
        assert(recording_);
        if (val(loss).numel() != 1)
            throw ShapeError("backward: loss must be scalar");
        grad(loss).fill(S(1));
        for (int64_t i = loss.id; i >= 0; --i) {
            Node& n = nodes_[(size_t)i];
            if (n.back && n.grad.defined()) n.back(*this);
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
    bool recording_;
};

using Graph = GraphT<float>;
using GraphD = GraphT<double>;

// ----------------------------------------------------------------- ops

template <class S>
Var op_add(GraphT<S>& g, Var a, Var b) {
    const auto& A = g.val(a);
    const auto& B = g.val(b);
    if (A.shape != B.shape) throw ShapeError("add: shape mismatch");
    TensorT<S> out(A.shape);
    const int64_t n = out.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
    for (int64_t i = 0; i < n; ++i) out[i] = A[i] + B[i];
    Var o = g.push(std::move(out), g.any_needs({a, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        gr.accum(a, gr.grad(o));
        gr.accum(b, gr.grad(o));
    });
    return o;
}

template <class S>
Var op_sub(GraphT<S>& g, Var a, Var b) {
    const auto& A = g.val(a);
    const auto& B = g.val(b);
    if (A.shape != B.shape) throw ShapeError("sub: shape mismatch");
    TensorT<S> out(A.shape);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = A[i] - B[i];
    Var o = g.push(std::move(out), g.any_needs({a, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        gr.accum(a, gr.grad(o));
        if (!gr.needs(b)) return;
        TensorT<S> neg(gr.grad(o).shape);
        for (int64_t i = 0; i < neg.numel(); ++i) neg[i] = -gr.grad(o)[i];
        gr.accum(b, neg);
    });
    return o;
}

template <class S>
Var op_mul(GraphT<S>& g, Var a, Var b) {
    const auto& A = g.val(a);
    const auto& B = g.val(b);
    if (A.shape != B.shape) throw ShapeError("mul: shape mismatch");
    TensorT<S> out(A.shape);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = A[i] * B[i];
    Var o = g.push(std::move(out), g.any_needs({a, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        if (gr.needs(a)) {
            TensorT<S> da(go.shape);
            for (int64_t i = 0; i < da.numel(); ++i)
                da[i] = go[i] * gr.val(b)[i];
            gr.accum(a, da);
        }
        if (gr.needs(b)) {
            TensorT<S> db(go.shape);
            for (int64_t i = 0; i < db.numel(); ++i)
                db[i] = go[i] * gr.val(a)[i];
            gr.accum(b, db);
        }
    });
    return o;
}

template <class S>
Var op_scale(GraphT<S>& g, Var a, double c) {
    TensorT<S> out;
    kern::map1(g.val(a), out, [c](S x) { return (S)((double)x * c); });
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(a)) return;
        TensorT<S> da;
        kern::map1(gr.grad(o), da, [c](S x) { return (S)((double)x * c); });
        gr.accum(a, da);
    });
    return o;
}

// x[N,D] + v (v shape [D] or [1,D]), broadcast over rows.
template <class S>
Var op_add_rowvec(GraphT<S>& g, Var a, Var v) {
    const auto& A = g.val(a);
    const auto& V = g.val(v);
    const int64_t n = A.dim(0), d = A.dim(1);
    if (V.numel() != d) throw ShapeError("add_rowvec: dim mismatch");
    TensorT<S> out(A.shape);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) out[i * d + j] = A[i * d + j] + V[j];
    Var o = g.push(std::move(out), g.any_needs({a, v}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        gr.accum(a, go);
        if (!gr.needs(v)) return;
        TensorT<S> dv(gr.val(v).shape);
        for (int64_t j = 0; j < d; ++j) {
            double acc = 0;
            for (int64_t i = 0; i < n; ++i) acc += (double)go[i * d + j];
            dv[j] = (S)acc;
        }
        gr.accum(v, dv);
    });
    return o;
}

// y = x * W^T + b. W: [Dout, Din]; b optional (pass Var{} to skip).
template <class S>
Var op_linear(GraphT<S>& g, Var x, Var w, Var b) {
    const auto& X = g.val(x);
    const auto& W = g.val(w);
    if (X.dim(1) != W.dim(1)) throw ShapeError("linear: in-dim mismatch");
    TensorT<S> out;
    kern::linear_fwd(X, W, b.valid() ? g.val(b).data() : nullptr, out);
    Var o = g.push(std::move(out), g.any_needs({x, w, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        kern::linear_bwd(gr.val(x), gr.val(w), go,
                         gr.needs(x) ? &gr.grad(x) : nullptr,
                         gr.needs(w) ? &gr.grad(w) : nullptr,
                         (b.valid() && gr.needs(b)) ? &gr.grad(b) : nullptr);
    });
    return o;
}

// Plain matmul for tests: [M,K] x [K,N].
template <class S>
Var op_matmul(GraphT<S>& g, Var a, Var b) {
    const auto& A = g.val(a);
    const auto& B = g.val(b);
    if (A.dim(1) != B.dim(0)) throw ShapeError("matmul: inner dim mismatch");
    const int64_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    TensorT<S> out({m, n});
    kern::gemm<S>(false, false, m, n, k, S(1), A.data(), k, B.data(), n, S(0),
                  out.data(), n);
    Var o = g.push(std::move(out), g.any_needs({a, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        if (gr.needs(a))
            kern::gemm<S>(false, true, m, k, n, S(1), go.data(), n,
                          gr.val(b).data(), n, S(1), gr.grad(a).data(), k);
        if (gr.needs(b))
            kern::gemm<S>(true, false, k, n, m, S(1), gr.val(a).data(), k,
                          go.data(), n, S(1), gr.grad(b).data(), n);
    });
    return o;
}

template <class S>
Var op_sin(GraphT<S>& g, Var a) {
    TensorT<S> out;
    kern::map1(g.val(a), out, [](S x) { return (S)std::sin((double)x); });
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(a)) return;
        const auto& X = gr.val(a);
        const auto& go = gr.grad(o);
        TensorT<S> da(X.shape);
        for (int64_t i = 0; i < da.numel(); ++i)
            da[i] = (S)((double)go[i] * std::cos((double)X[i]));
        gr.accum(a, da);
    });
    return o;
}

template <class S>
Var op_silu(GraphT<S>& g, Var a) {
    TensorT<S> out;
    kern::map1(g.val(a), out, [](S x) {
        const double s = 1.0 / (1.0 + std::exp(-(double)x));
        return (S)((double)x * s);
    });
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(a)) return;
        const auto& X = gr.val(a);
        const auto& go = gr.grad(o);
        TensorT<S> da(X.shape);
        for (int64_t i = 0; i < da.numel(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-(double)X[i]));
            da[i] = (S)((double)go[i] * s * (1.0 + (double)X[i] * (1.0 - s)));
        }
        gr.accum(a, da);
    });
    return o;
}

template <class S>
Var op_gelu(GraphT<S>& g, Var a) {
    TensorT<S> out;
    kern::map1(g.val(a), out, [](S x) {
        return (S)(0.5 * (double)x * (1.0 + std::erf((double)x * M_SQRT1_2)));
    });
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(a)) return;
        const auto& X = gr.val(a);
        const auto& go = gr.grad(o);
        TensorT<S> da(X.shape);
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (int64_t i = 0; i < da.numel(); ++i) {
            const double x = (double)X[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            da[i] = (S)((double)go[i] * (cdf + x * pdf));
        }
        gr.accum(a, da);
    });
    return o;
}

template <class S>
Var op_rmsnorm(GraphT<S>& g, Var x, Var w, double eps = 1e-6) {
    TensorT<S> out, inv_rms;
    kern::rmsnorm_fwd(g.val(x), g.val(w).data(), eps, out, inv_rms);
    Var o = g.push(std::move(out), g.any_needs({x, w}));
    g.set_back(o, [=](GraphT<S>& gr) {
        kern::rmsnorm_bwd(gr.val(x), gr.val(w).data(), inv_rms, gr.grad(o),
                          gr.grad(x), gr.grad(w));
    });
    return o;
}

template <class S>
Var op_groupnorm(GraphT<S>& g, Var x, Var gamma, Var beta, int groups,
                 double eps = 1e-5) {
    TensorT<S> out, mean, inv_std;
    kern::groupnorm_fwd(g.val(x), g.val(gamma).data(), g.val(beta).data(),
                        groups, eps, out, mean, inv_std);
    Var o = g.push(std::move(out), g.any_needs({x, gamma, beta}));
    g.set_back(o, [=](GraphT<S>& gr) {
        kern::groupnorm_bwd(gr.val(x), gr.val(gamma).data(), mean, inv_std,
                            gr.grad(o), groups, gr.grad(x), gr.grad(gamma),
                            gr.grad(beta));
    });
    return o;
}

template <class S>
Var op_conv3d(GraphT<S>& g, Var x, Var w, Var b, const kern::Conv3dDims& d) {
    const auto& X = g.val(x);
    const auto& W = g.val(w);
    if (X.dim(3) != W.dim(3)) throw ShapeError("conv3d: channel mismatch");
    TensorT<S> cols;
    kern::conv3d_im2col(X, d, cols);
    const Shape xshape = X.shape;  // copy before push below invalidates X
    const int64_t oT = kern::conv_out_t(X.dim(0), d);
    const int64_t oH = kern::conv_out_h(X.dim(1), d);
    const int64_t oW = kern::conv_out_w(X.dim(2), d);
    TensorT<S> out;
    kern::conv3d_fwd(cols, W, b.valid() ? g.val(b).data() : nullptr, oT, oH,
                     oW, out);
    Var o = g.push(std::move(out), g.any_needs({x, w, b}));
    if (!g.recording() || !g.needs(o)) return o;
    g.set_back(o, [=](GraphT<S>& gr) {
        const int64_t Co = gr.val(w).dim(4);
        const int64_t K = cols.dim(1);
        const int64_t npos = cols.dim(0);
        TensorT<S> dy = gr.grad(o).reshaped({npos, Co});
        if (gr.needs(w))
            kern::gemm<S>(true, false, K, Co, npos, S(1), cols.data(), K,
                          dy.data(), Co, S(1), gr.grad(w).data(), Co);
        if (b.valid() && gr.needs(b)) {
            auto& db = gr.grad(b);
            for (int64_t j = 0; j < Co; ++j) {
                double acc = 0;
                for (int64_t i = 0; i < npos; ++i) acc += (double)dy[i * Co + j];
                db[j] += (S)acc;
            }
        }
        if (gr.needs(x)) {
            TensorT<S> dcols({npos, K});
            kern::gemm<S>(false, true, npos, K, Co, S(1), dy.data(), Co,
                          gr.val(w).data(), Co, S(0), dcols.data(), K);
            kern::conv3d_col2im_accum(dcols, xshape[0], xshape[1], xshape[2],
                                      xshape[3], d, gr.grad(x));
        }
    });
    return o;
}

template <class S>
Var op_attention(GraphT<S>& g, Var q, Var k, Var v, int heads) {
    TensorT<S> out, probs;
    const bool train = g.recording() && g.any_needs({q, k, v});
    kern::attention_fwd(g.val(q), g.val(k), g.val(v), heads, out,
                        train ? &probs : nullptr);
    Var o = g.push(std::move(out), train);
    g.set_back(o, [=](GraphT<S>& gr) {
        kern::attention_bwd(gr.val(q), gr.val(k), gr.val(v), probs, gr.grad(o),
                            heads, gr.grad(q), gr.grad(k), gr.grad(v));
    });
    return o;
}

template <class S>
Var op_reshape(GraphT<S>& g, Var a, Shape sh) {
    TensorT<S> out = g.val(a).reshaped(std::move(sh));
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) { gr.accum(a, gr.grad(o)); });
    return o;
}

template <class S>
Var op_concat_cols(GraphT<S>& g, Var a, Var b) {
    const auto& A = g.val(a);
    const auto& B = g.val(b);
    if (A.dim(0) != B.dim(0)) throw ShapeError("concat_cols: row mismatch");
    const int64_t n = A.dim(0), da = A.dim(1), db = B.dim(1);
    TensorT<S> out({n, da + db});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < da; ++j) out[i * (da + db) + j] = A[i * da + j];
        for (int64_t j = 0; j < db; ++j)
            out[i * (da + db) + da + j] = B[i * db + j];
    }
    Var o = g.push(std::move(out), g.any_needs({a, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        if (gr.needs(a)) {
            TensorT<S> dA({n, da});
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < da; ++j)
                    dA[i * da + j] = go[i * (da + db) + j];
            gr.accum(a, dA);
        }
        if (gr.needs(b)) {
            TensorT<S> dB({n, db});
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < db; ++j)
                    dB[i * db + j] = go[i * (da + db) + da + j];
            gr.accum(b, dB);
        }
    });
    return o;
}

template <class S>
Var op_slice_cols(GraphT<S>& g, Var a, int64_t c0, int64_t c1) {
    const auto& A = g.val(a);
    const int64_t n = A.dim(0), d = A.dim(1), w = c1 - c0;
    TensorT<S> out({n, w});
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < w; ++j) out[i * w + j] = A[i * d + c0 + j];
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(a)) return;
        const auto& go = gr.grad(o);
        auto& da = gr.grad(a);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < w; ++j) da[i * d + c0 + j] += go[i * w + j];
    });
    return o;
}

template <class S>
Var op_slice_rows(GraphT<S>& g, Var a, int64_t r0, int64_t r1) {
    const auto& A = g.val(a);
    const int64_t d = A.dim(1), n = r1 - r0;
    TensorT<S> out({n, d});
    std::copy(A.data() + r0 * d, A.data() + r1 * d, out.data());
    Var o = g.push(std::move(out), g.any_needs({a}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(a)) return;
        const auto& go = gr.grad(o);
        auto& da = gr.grad(a);
        for (int64_t i = 0; i < n * d; ++i) da[r0 * d + i] += go[i];
    });
    return o;
}

template <class S>
Var op_concat_rows(GraphT<S>& g, Var a, Var b) {
    const auto& A = g.val(a);
    const auto& B = g.val(b);
    if (A.dim(1) != B.dim(1)) throw ShapeError("concat_rows: col mismatch");
    const int64_t na = A.dim(0), nb = B.dim(0), d = A.dim(1);
    TensorT<S> out({na + nb, d});
    std::copy(A.data(), A.data() + na * d, out.data());
    std::copy(B.data(), B.data() + nb * d, out.data() + na * d);
    Var o = g.push(std::move(out), g.any_needs({a, b}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        if (gr.needs(a)) {
            auto& da = gr.grad(a);
            for (int64_t i = 0; i < na * d; ++i) da[i] += go[i];
        }
        if (gr.needs(b)) {
            auto& db = gr.grad(b);
            for (int64_t i = 0; i < nb * d; ++i) db[i] += go[na * d + i];
        }
    });
    return o;
}

// out = a with rows [at, at+rows(src)) replaced by src.
template <class S>
Var op_replace_rows(GraphT<S>& g, Var a, Var src, int64_t at) {
    const auto& A = g.val(a);
    const auto& B = g.val(src);
    if (A.dim(1) != B.dim(1)) throw ShapeError("replace_rows: col mismatch");
    const int64_t d = A.dim(1), r = B.dim(0);
    TensorT<S> out = A.clone();
    std::copy(B.data(), B.data() + r * d, out.data() + at * d);
    Var o = g.push(std::move(out), g.any_needs({a, src}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        if (gr.needs(a)) {
            TensorT<S> da = go.clone();
            std::fill(da.data() + at * d, da.data() + (at + r) * d, S(0));
            gr.accum(a, da);
        }
        if (gr.needs(src)) {
            TensorT<S> ds({r, d});
            std::copy(go.data() + at * d, go.data() + (at + r) * d, ds.data());
            gr.accum(src, ds);
        }
    });
    return o;
}

// out[t*P+p, :] = x[p, :]  (tile a per-position matrix over T blocks)
template <class S>
Var op_tile_rows(GraphT<S>& g, Var x, int64_t T) {
    const auto& X = g.val(x);
    const int64_t P = X.dim(0), d = X.dim(1);
    TensorT<S> out({T * P, d});
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < T; ++t)
        std::copy(X.data(), X.data() + P * d, out.data() + t * P * d);
    Var o = g.push(std::move(out), g.any_needs({x}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(x)) return;
        const auto& go = gr.grad(o);
        TensorT<S> dx({P, d});
        for (int64_t t = 0; t < T; ++t)
            for (int64_t i = 0; i < P * d; ++i) dx[i] += go[t * P * d + i];
        gr.accum(x, dx);
    });
    return o;
}

// out[t*P+p, :] = x[t, :]  (repeat each row P times)
template <class S>
Var op_repeat_rows(GraphT<S>& g, Var x, int64_t P) {
    const auto& X = g.val(x);
    const int64_t T = X.dim(0), d = X.dim(1);
    TensorT<S> out({T * P, d});
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < T; ++t)
        for (int64_t p = 0; p < P; ++p)
            std::copy(X.data() + t * d, X.data() + (t + 1) * d,
                      out.data() + (t * P + p) * d);
    Var o = g.push(std::move(out), g.any_needs({x}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(x)) return;
        const auto& go = gr.grad(o);
        TensorT<S> dx({T, d});
        for (int64_t t = 0; t < T; ++t)
            for (int64_t p = 0; p < P; ++p)
                for (int64_t j = 0; j < d; ++j)
                    dx[t * d + j] += go[(t * P + p) * d + j];
        gr.accum(x, dx);
    });
    return o;
}

// FiLM: h[T*P, D] -> (1 + gamma[p]) * h + beta[p], p = row % P.
template <class S>
Var op_film(GraphT<S>& g, Var h, Var gamma, Var beta, int64_t P) {
    const auto& H = g.val(h);
    const auto& Ga = g.val(gamma);
    const int64_t N = H.dim(0), d = H.dim(1);
    if (Ga.dim(0) != P || Ga.dim(1) != d) throw ShapeError("film: gamma shape");
    TensorT<S> out(H.shape);
    const auto& Be = g.val(beta);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < N; ++i) {
        const int64_t p = i % P;
        for (int64_t j = 0; j < d; ++j)
            out[i * d + j] =
                (S(1) + Ga[p * d + j]) * H[i * d + j] + Be[p * d + j];
    }
    Var o = g.push(std::move(out), g.any_needs({h, gamma, beta}));
    g.set_back(o, [=](GraphT<S>& gr) {
        const auto& go = gr.grad(o);
        const auto& Hv = gr.val(h);
        const auto& Gv = gr.val(gamma);
        if (gr.needs(h)) {
            TensorT<S> dh(Hv.shape);
            for (int64_t i = 0; i < N; ++i) {
                const int64_t p = i % P;
                for (int64_t j = 0; j < d; ++j)
                    dh[i * d + j] = go[i * d + j] * (S(1) + Gv[p * d + j]);
            }
            gr.accum(h, dh);
        }
        if (gr.needs(gamma)) {
            TensorT<S> dg({P, d});
            for (int64_t i = 0; i < N; ++i) {
                const int64_t p = i % P;
                for (int64_t j = 0; j < d; ++j)
                    dg[p * d + j] += go[i * d + j] * Hv[i * d + j];
            }
            gr.accum(gamma, dg);
        }
        if (gr.needs(beta)) {
            TensorT<S> db({P, d});
            for (int64_t i = 0; i < N; ++i) {
                const int64_t p = i % P;
                for (int64_t j = 0; j < d; ++j) db[p * d + j] += go[i * d + j];
            }
            gr.accum(beta, db);
        }
    });
    return o;
}

template <class S>
Var op_patchify(GraphT<S>& g, Var x, int64_t p) {
    const auto& X = g.val(x);
    if (X.dim(1) % p != 0 || X.dim(2) % p != 0)
        throw ShapeError("patchify: dims not divisible by patch size");
    TensorT<S> out;
    kern::patchify(X, p, out);
    const int64_t T = X.dim(0), H = X.dim(1), W = X.dim(2), C = X.dim(3);
    Var o = g.push(std::move(out), g.any_needs({x}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(x)) return;
        TensorT<S> dx;
        kern::unpatchify(gr.grad(o), T, H, W, C, p, dx);
        gr.accum(x, dx);
    });
    return o;
}

template <class S>
Var op_unpatchify(GraphT<S>& g, Var tok, int64_t T, int64_t H, int64_t W,
                  int64_t C, int64_t p) {
    TensorT<S> out;
    kern::unpatchify(g.val(tok), T, H, W, C, p, out);
    Var o = g.push(std::move(out), g.any_needs({tok}));
    g.set_back(o, [=](GraphT<S>& gr) {
        if (!gr.needs(tok)) return;
        TensorT<S> dt;
        kern::patchify(gr.grad(o), p, dt);
        gr.accum(tok, dt);
    });
    return o;
}

// Mean squared error against a constant target: mean((x - t)^2).
template <class S>
Var op_mse(GraphT<S>& g, Var x, const TensorT<S>& target) {
    const auto& X = g.val(x);
    if (X.shape != target.shape) throw ShapeError("mse: shape mismatch");
    const int64_t n = X.numel();
    // fixed-chunk deterministic reduction
    constexpr int64_t kChunks = 64;
    double partial[kChunks] = {0};
    const int64_t per = (n + kChunks - 1) / kChunks;
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < kChunks; ++c) {
        double acc = 0;
        const int64_t hi = std::min(n, (c + 1) * per);
        for (int64_t i = c * per; i < hi; ++i) {
            const double d = (double)X[i] - (double)target[i];
            acc += d * d;
        }
        partial[c] = acc;
    }
    double total = 0;
    for (int64_t c = 0; c < kChunks; ++c) total += partial[c];
    TensorT<S> out({1});
    out[0] = (S)(total / (double)n);
    Var o = g.push(std::move(out), g.any_needs({x}));
    g.set_back(o, [=, t = target](GraphT<S>& gr) {
        if (!gr.needs(x)) return;
        const double go = (double)gr.grad(o)[0];
        const auto& Xv = gr.val(x);
        TensorT<S> dx(Xv.shape);
        const double c2 = 2.0 * go / (double)n;
#pragma omp parallel for schedule(static) if (n > 16384)
        for (int64_t i = 0; i < n; ++i)
            dx[i] = (S)(c2 * ((double)Xv[i] - (double)t[i]));
        gr.accum(x, dx);
    });
    return o;
}

}  // namespace regen
