#include "regen/eval/metrics.hpp"

#include <cmath>
#include <vector>

namespace regen {

namespace {

inline double to01(float v) { return ((double)v + 1.0) * 0.5; }

// BT.601 luma of one frame on the [0,1] range.
std::vector<double> luma_frame(const VideoClip& c, int64_t t) {
    const int64_t hw = c.h() * c.w();
    std::vector<double> y((size_t)hw);
    const float* p = c.frames.data() + t * hw * 3;
    for (int64_t i = 0; i < hw; ++i)
        y[(size_t)i] = 0.299 * to01(p[i * 3]) + 0.587 * to01(p[i * 3 + 1]) +
                       0.114 * to01(p[i * 3 + 2]);
    return y;
}

}  // namespace

double psnr(const VideoClip& a, const VideoClip& b) {
    if (a.frames.shape != b.frames.shape)
        throw ShapeError("psnr: shape mismatch");
    double se = 0;
    const int64_t n = a.frames.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double d = to01(a.frames[i]) - to01(b.frames[i]);
        se += d * d;
    }
    const double mse = se / (double)n;
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const VideoClip& a, const VideoClip& b, int window) {
    if (a.frames.shape != b.frames.shape)
        throw ShapeError("ssim: shape mismatch");
    const int64_t H = a.h(), W = a.w();
    if (H < window || W < window)
        throw ShapeError("ssim: frames smaller than window");
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;

    // 11-tap Gaussian, sigma 1.5, normalized
    std::vector<double> g((size_t)window);
    const double sigma = 1.5;
    double gsum = 0;
    for (int i = 0; i < window; ++i) {
        const double x = i - (window - 1) / 2.0;
        g[(size_t)i] = std::exp(-x * x / (2 * sigma * sigma));
        gsum += g[(size_t)i];
    }
    for (auto& v : g) v /= gsum;

    const int64_t oh = H - window + 1, ow = W - window + 1;
    double total = 0;
    for (int64_t t = 0; t < a.t(); ++t) {
        const auto ya = luma_frame(a, t);
        const auto yb = luma_frame(b, t);
        double frame_sum = 0;
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t x = 0; x < ow; ++x) {
                double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                for (int dy = 0; dy < window; ++dy)
                    for (int dx = 0; dx < window; ++dx) {
                        const double wgt = g[(size_t)dy] * g[(size_t)dx];
                        const double va = ya[(size_t)((y + dy) * W + x + dx)];
                        const double vb = yb[(size_t)((y + dy) * W + x + dx)];
                        mu_a += wgt * va;
                        mu_b += wgt * vb;
                        aa += wgt * (va * va);
                        bb += wgt * (vb * vb);
                        ab += wgt * (va * vb);
                    }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                // products grouped so the expression is bitwise symmetric
                frame_sum += ((2 * (mu_a * mu_b) + C1) * (2 * cov + C2)) /
                             ((mu_a * mu_a + mu_b * mu_b + C1) *
                              (var_a + var_b + C2));
            }
        total += frame_sum / (double)(oh * ow);
    }
    return total / (double)a.t();
}

double compression_factor(int channels, int m, int k, int c_lat,
                          int latents_per_chunk) {
    if (channels <= 0 || m <= 0 || k <= 0 || c_lat <= 0 ||
        latents_per_chunk <= 0)
        throw ShapeError("compression_factor: arguments must be positive");
    return (double)channels * m * m * k / ((double)c_lat * latents_per_chunk);
}

double boundary_discontinuity(const VideoClip& clip, int k) {
    const int64_t len = k + 1;
    const int64_t n_chunks = clip.t() / len;
    if (n_chunks < 2) return 0.0;
    const int64_t fe = clip.h() * clip.w() * 3;
    double total = 0;
    for (int64_t c = 0; c + 1 < n_chunks; ++c) {
        const float* last = clip.frames.data() + (c * len + k) * fe;
        const float* first = clip.frames.data() + (c + 1) * len * fe;
        double acc = 0;
        for (int64_t i = 0; i < fe; ++i)
            acc += std::abs(to01(last[i]) - to01(first[i]));
        total += acc / (double)fe;
    }
    return total / (double)(n_chunks - 1);
}

}  // namespace regen
