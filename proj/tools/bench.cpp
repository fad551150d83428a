// Kernel benchmark: parallel implementations vs the serial references.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "regen/core/kernels.hpp"
#include "regen/core/kernels_ref.hpp"
#include "regen/core/rng.hpp"

using namespace regen;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
    fn();  // warmup
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
               .count() /
           reps;
}

void row(const char* name, double serial_s, double par_s, double gflop) {
    std::printf("%-22s %10.3f ms %10.3f ms %8.2fx %8.2f GFLOP/s\n", name,
                serial_s * 1e3, par_s * 1e3, serial_s / par_s,
                gflop / par_s);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-22s %13s %13s %9s %15s\n", "kernel", "serial", "parallel",
                "speedup", "throughput");
    Rng rng(0);

    {  // gemm 512^3
        const int64_t n = 512;
        Tensor a({n, n}), b({n, n}), c({n, n}), cref({n, n});
        rng.fill_normal(a);
        rng.fill_normal(b);
        const double s = time_of(
            [&] {
                ref::gemm<float>(n, n, n, a.data(), n, b.data(), n,
                                 cref.data(), n, false);
            },
            1);
        const double p = time_of(
            [&] {
                kern::gemm<float>(false, false, n, n, n, 1.f, a.data(), n,
                                  b.data(), n, 0.f, c.data(), n);
            },
            10);
        row("gemm 512x512x512", s, p, 2.0 * n * n * n / 1e9);
    }

    {  // conv3d, encoder stage shape
        Tensor x({5, 64, 64, 16}), w({3, 3, 3, 16, 16}), bias({16});
        rng.fill_normal(x);
        rng.fill_normal(w);
        const kern::Conv3dDims d{3, 3, 3, 1, 2, 2};
        Tensor yref;
        const double s = time_of(
            [&] { ref::conv3d(x, w, bias.data(), d, yref); }, 1);
        const double p = time_of(
            [&] {
                Tensor cols, y;
                kern::conv3d_im2col(x, d, cols);
                kern::conv3d_fwd(cols, w, bias.data(), kern::conv_out_t(5, d),
                                 kern::conv_out_h(64, d),
                                 kern::conv_out_w(64, d), y);
            },
            5);
        const double gflop =
            2.0 * 5 * 32 * 32 * 16 * 27 * 16 / 1e9;
        row("conv3d 5x64x64x16", s, p, gflop);
    }

    {  // attention, 320 tokens x 128 dims
        const int64_t n = 320, dm = 128;
        Tensor q({n, dm}), k({n, dm}), v({n, dm});
        rng.fill_normal(q);
        rng.fill_normal(k);
        rng.fill_normal(v);
        Tensor out, outref;
        const double s =
            time_of([&] { ref::attention(q, k, v, 4, outref); }, 2);
        const double p = time_of(
            [&] { kern::attention_fwd(q, k, v, 4, out, (Tensor*)nullptr); },
            10);
        row("attention 320x128", s, p, 4.0 * n * n * dm / 1e9);
    }

    {  // groupnorm over a video feature map
        Tensor x({5, 32, 32, 32}), gamma({32}), beta({32});
        rng.fill_normal(x);
        gamma.fill(1.f);
        Tensor yref;
        const double s = time_of(
            [&] { ref::groupnorm(x, gamma.data(), beta.data(), 8, 1e-5, yref); },
            3);
        const double p = time_of(
            [&] {
                Tensor y, mean, inv;
                kern::groupnorm_fwd(x, gamma.data(), beta.data(), 8, 1e-5, y,
                                    mean, inv);
            },
            10);
        row("groupnorm 5x32x32x32", s, p, 6.0 * x.numel() / 1e9);
    }

    {  // rmsnorm over a token stream
        Tensor x({4096, 256}), w({256});
        rng.fill_normal(x);
        w.fill(1.f);
        Tensor yref;
        const double s =
            time_of([&] { ref::rmsnorm(x, w.data(), 1e-6, yref); }, 3);
        const double p = time_of(
            [&] {
                Tensor y, inv;
                kern::rmsnorm_fwd(x, w.data(), 1e-6, y, inv);
            },
            10);
        row("rmsnorm 4096x256", s, p, 3.0 * x.numel() / 1e9);
    }
    return 0;
}
