#include "regen/diffusion/schedule.hpp"

#include <cmath>

namespace regen {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "cosine") return ScheduleKind::cosine;
    if (s == "linear") return ScheduleKind::linear;
    throw FormatError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::cosine ? "cosine" : "linear";
}

NoiseSchedule make_schedule(ScheduleKind kind, int num_steps,
                            double alpha_min) {
    if (num_steps < 1) throw ShapeError("make_schedule: num_steps must be >= 1");
    if (!(alpha_min > 0.0 && alpha_min < 1.0))
        throw ShapeError("make_schedule: alpha_min must be in (0, 1)");
    NoiseSchedule s;
    s.kind = kind;
    s.num_steps = num_steps;
    s.alpha_min = alpha_min;
    s.alpha.resize((size_t)num_steps);
    const double alpha_max = 1.0 - 1e-4;
    if (num_steps == 1) {
        s.alpha[0] = alpha_min;
        return s;
    }
    // base(u): strictly decreasing from 1 to 0 on [0,1]; remapped onto
    // [alpha_min, alpha_max] so both endpoints and monotonicity hold exactly.
    constexpr double cs = 0.008;  // cosine shift (Nichol & Dhariwal)
    const double denom = std::cos(cs / (1.0 + cs) * M_PI / 2.0);
    for (int i = 0; i < num_steps; ++i) {
        const double u = (double)i / (double)(num_steps - 1);
        double base;
        if (kind == ScheduleKind::linear) {
            base = 1.0 - u;
        } else {
            const double c = std::cos((u + cs) / (1.0 + cs) * M_PI / 2.0);
            base = (c * c) / (denom * denom);
        }
        s.alpha[(size_t)i] = alpha_min + (alpha_max - alpha_min) * base;
    }
    return s;
}

std::vector<int> sampling_steps(const NoiseSchedule& sched, int n_steps) {
    if (n_steps < 1) throw ShapeError("sampling: n_steps must be >= 1");
    n_steps = std::min(n_steps, sched.num_steps);
    std::vector<int> idx((size_t)n_steps);
    for (int r = 0; r < n_steps; ++r) {
        // r = 0 is the noisiest step; the run ends at a low-noise step
        const double frac = (double)(n_steps - r) / (double)n_steps;
        idx[(size_t)r] =
            (int)std::llround(frac * (double)(sched.num_steps - 1));
    }
    return idx;
}

}  // namespace regen
