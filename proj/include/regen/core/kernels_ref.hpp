#pragma once

// Serial reference kernels. Single-threaded, loop-obvious implementations
// kept as the ground truth for the parallel kernels in kernels.hpp; used by
// the unit tests and the bench tool, never on the hot path.

#include <cmath>
#include <cstdint>

#include "regen/core/tensor.hpp"

namespace regen::ref {

// C[M,N] = A[M,K] * B[K,N] (+ C if accumulate) ; row-major.
template <class S>
void gemm(int64_t m, int64_t n, int64_t k, const S* a, int64_t lda,
          const S* b, int64_t ldb, S* c, int64_t ldc, bool accumulate) {
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            S acc = accumulate ? c[i * ldc + j] : S(0);
            for (int64_t p = 0; p < k; ++p)
                acc += a[i * lda + p] * b[p * ldb + j];
            c[i * ldc + j] = acc;
        }
    }
}

struct Conv3dDims {
    int64_t kt, kh, kw;
    int64_t st, sh, sw;
};

// Causal 3D convolution, channels-last. Time is left-padded by (kt-1)
// replicated first frames; space is zero-padded by (kh-1)/2, (kw-1)/2.
// x: [T,H,W,Cin], w: [kt,kh,kw,Cin,Cout], y: [oT,oH,oW,Cout].
template <class S>
void conv3d(const TensorT<S>& x, const TensorT<S>& w, const S* bias,
            const Conv3dDims& d, TensorT<S>& y) {
    const int64_t T = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
    const int64_t Co = w.dim(4);
    const int64_t oT = (T - 1) / d.st + 1;
    const int64_t oH = (H + 2 * ((d.kh - 1) / 2) - d.kh) / d.sh + 1;
    const int64_t oW = (W + 2 * ((d.kw - 1) / 2) - d.kw) / d.sw + 1;
    y = TensorT<S>({oT, oH, oW, Co});
    const int64_t ph = (d.kh - 1) / 2, pw = (d.kw - 1) / 2;
    for (int64_t ot = 0; ot < oT; ++ot)
        for (int64_t oh = 0; oh < oH; ++oh)
            for (int64_t ow = 0; ow < oW; ++ow)
                for (int64_t co = 0; co < Co; ++co) {
                    double acc = bias ? (double)bias[co] : 0.0;
                    for (int64_t dt = 0; dt < d.kt; ++dt)
                        for (int64_t dh = 0; dh < d.kh; ++dh)
                            for (int64_t dw = 0; dw < d.kw; ++dw) {
                                int64_t it = ot * d.st - (d.kt - 1) + dt;
                                const int64_t ih = oh * d.sh - ph + dh;
                                const int64_t iw = ow * d.sw - pw + dw;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W)
                                    continue;
                                if (it < 0) it = 0;  // replicate first frame
                                for (int64_t ci = 0; ci < Ci; ++ci) {
                                    acc += (double)x[((it * H + ih) * W + iw) *
                                                         Ci +
                                                     ci] *
                                           (double)w[(((dt * d.kh + dh) * d.kw +
                                                       dw) *
                                                          Ci +
                                                      ci) *
                                                         Co +
                                                     co];
                                }
                            }
                    y[((ot * oH + oh) * oW + ow) * Co + co] = (S)acc;
                }
}

// Full self-attention over one head layout [N, D] with `heads` heads.
template <class S>
void attention(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v,
               int heads, TensorT<S>& out) {
    const int64_t n = q.dim(0), dm = q.dim(1);
    const int64_t dh = dm / heads;
    const double scale = 1.0 / std::sqrt((double)dh);
    out = TensorT<S>({n, dm});
    std::vector<double> row((size_t)n);
    for (int h = 0; h < heads; ++h) {
        const int64_t off = (int64_t)h * dh;
        for (int64_t i = 0; i < n; ++i) {
            double mx = -1e300;
            for (int64_t j = 0; j < n; ++j) {
                double s = 0;
                for (int64_t c = 0; c < dh; ++c)
                    s += (double)q[i * dm + off + c] *
                         (double)k[j * dm + off + c];
                row[(size_t)j] = s * scale;
                mx = std::max(mx, row[(size_t)j]);
            }
            double denom = 0;
            for (int64_t j = 0; j < n; ++j) {
                row[(size_t)j] = std::exp(row[(size_t)j] - mx);
                denom += row[(size_t)j];
            }
            for (int64_t c = 0; c < dh; ++c) {
                double acc = 0;
                for (int64_t j = 0; j < n; ++j)
                    acc += row[(size_t)j] * (double)v[j * dm + off + c];
                out[i * dm + off + c] = (S)(acc / denom);
            }
        }
    }
}

// Per-timestep group norm, channels-last x: [T,H,W,C].
template <class S>
void groupnorm(const TensorT<S>& x, const S* gamma, const S* beta, int groups,
               double eps, TensorT<S>& y) {
    const int64_t T = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    const int64_t gs = C / groups;
    y = TensorT<S>(x.shape);
    for (int64_t t = 0; t < T; ++t)
        for (int64_t g = 0; g < groups; ++g) {
            double mean = 0, var = 0;
            const int64_t cnt = H * W * gs;
            for (int64_t hw = 0; hw < H * W; ++hw)
                for (int64_t c = g * gs; c < (g + 1) * gs; ++c)
                    mean += (double)x[(t * H * W + hw) * C + c];
            mean /= (double)cnt;
            for (int64_t hw = 0; hw < H * W; ++hw)
                for (int64_t c = g * gs; c < (g + 1) * gs; ++c) {
                    const double d = (double)x[(t * H * W + hw) * C + c] - mean;
                    var += d * d;
                }
            var /= (double)cnt;
            const double inv = 1.0 / std::sqrt(var + eps);
            for (int64_t hw = 0; hw < H * W; ++hw)
                for (int64_t c = g * gs; c < (g + 1) * gs; ++c) {
                    const double xhat =
                        ((double)x[(t * H * W + hw) * C + c] - mean) * inv;
                    y[(t * H * W + hw) * C + c] =
                        (S)(xhat * (double)gamma[c] + (double)beta[c]);
                }
        }
}

template <class S>
void rmsnorm(const TensorT<S>& x, const S* w, double eps, TensorT<S>& y) {
    const int64_t n = x.dim(0), dm = x.dim(1);
    y = TensorT<S>(x.shape);
    for (int64_t i = 0; i < n; ++i) {
        double ss = 0;
        for (int64_t j = 0; j < dm; ++j)
            ss += (double)x[i * dm + j] * (double)x[i * dm + j];
        const double inv = 1.0 / std::sqrt(ss / (double)dm + eps);
        for (int64_t j = 0; j < dm; ++j)
            y[i * dm + j] = (S)((double)x[i * dm + j] * inv * (double)w[j]);
    }
}

}  // namespace regen::ref
