#pragma once

// AdamW with decoupled weight decay and global-norm gradient clipping.

#include <cmath>
#include <vector>

#include "regen/core/graph.hpp"

namespace regen {

struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    int64_t t = 0;

    void zero_grad(const std::vector<Param*>& ps) {
        for (auto* p : ps) p->zero_grad();
    }

    // Scales gradients so the global norm is at most max_norm; returns the
    // post-clip norm.
    static double clip_grads(const std::vector<Param*>& ps, double max_norm) {
        double sq = 0;
        for (auto* p : ps) sq += kern::sum_sq(p->grad);
        const double norm = std::sqrt(sq);
        if (max_norm > 0 && norm > max_norm) {
            const float scale = (float)(max_norm / (norm + 1e-12));
            for (auto* p : ps)
                for (int64_t i = 0; i < p->grad.numel(); ++i)
                    p->grad[i] *= scale;
            return max_norm;
        }
        return norm;
    }

    void step(const std::vector<Param*>& ps, double lr) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, (double)t);
        const double bc2 = 1.0 - std::pow(beta2, (double)t);
        for (auto* p : ps) {
            if (!p->adam_m.defined()) {
                p->adam_m = Tensor(p->value.shape);
                p->adam_v = Tensor(p->value.shape);
            }
            float* w = p->value.data();
            const float* g = p->grad.data();
            float* m = p->adam_m.data();
            float* v = p->adam_v.data();
            const int64_t n = p->value.numel();
            // norm layer scales and biases are excluded from decay
            const bool decay = p->value.ndim() >= 2;
#pragma omp parallel for schedule(static) if (n > 16384)
            for (int64_t i = 0; i < n; ++i) {
                m[i] = (float)(beta1 * m[i] + (1 - beta1) * g[i]);
                v[i] = (float)(beta2 * v[i] + (1 - beta2) * (double)g[i] * g[i]);
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                double upd = mhat / (std::sqrt(vhat) + eps);
                if (decay) upd += weight_decay * w[i];
                w[i] = (float)(w[i] - lr * upd);
            }
        }
    }
};

// Warmup then cosine decay to floor_frac * base_lr.
inline double lr_at(int64_t iter, int64_t total, double base_lr,
                    int64_t warmup, double floor_frac = 0.1) {
    if (warmup > 0 && iter < warmup)
        return base_lr * (double)(iter + 1) / (double)warmup;
    if (total <= warmup) return base_lr;
    const double p = (double)(iter - warmup) / (double)(total - warmup);
    const double cosv = 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, p)));
    return base_lr * (floor_frac + (1.0 - floor_frac) * cosv);
}

}  // namespace regen
