#pragma once

#include <string>
#include <vector>

#include "regen/core/tensor.hpp"

namespace regen {

enum class ScheduleKind { cosine, linear };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

// Discretized cumulative signal level curve: alpha[i] is alpha-bar at
// normalized time i/(num_steps-1). Strictly decreasing, alpha[0] ~ 1,
// alpha[last] = alpha_min. The floor keeps the one-step x0 estimate
// (division by sqrt(alpha_min)) well conditioned.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::cosine;
    int num_steps = 1000;
    double alpha_min = 1e-3;
    std::vector<double> alpha;

    double norm_time(int step) const {
        return num_steps > 1 ? (double)step / (double)(num_steps - 1) : 1.0;
    }
};

NoiseSchedule make_schedule(ScheduleKind kind, int num_steps,
                            double alpha_min = 1e-3);

// x_t = sqrt(a) x0 + sqrt(1-a) eps  (the reparameterized forward process)
template <class S>
TensorT<S> forward_sample(const TensorT<S>& x0, double alpha_t,
                          const TensorT<S>& eps) {
    if (x0.shape != eps.shape)
        throw ShapeError("forward_sample: shape mismatch");
    if (!(alpha_t > 0.0 && alpha_t <= 1.0))
        throw ShapeError("forward_sample: alpha_t must be in (0, 1]");
    const double sa = std::sqrt(alpha_t);
    const double sb = std::sqrt(1.0 - alpha_t);
    TensorT<S> out(x0.shape);
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = (S)(sa * (double)x0[i] + sb * (double)eps[i]);
    return out;
}

// Descending schedule indices used for an n_steps sampling run. The first
// entry is the last (noisiest) schedule step; one-step sampling visits only
// that step.
std::vector<int> sampling_steps(const NoiseSchedule& sched, int n_steps);

}  // namespace regen
