#include "regen/train/tasks.hpp"

#include <cmath>

#include "regen/model/coords.hpp"

namespace regen {

std::string to_string(Task t) {
    switch (t) {
        case Task::recon: return "recon";
        case Task::interp: return "interp";
        default: return "extrap";
    }
}

std::array<double, 3> TaskSchedule::probs(int64_t iter) const {
    const double progress =
        total_iters > 0 ? (double)iter / (double)total_iters : 0.0;
    double ramp = 0.0;
    if (progress >= ramp_frac)
        ramp = 1.0;
    else if (progress > warmup_frac)
        ramp = (progress - warmup_frac) / (ramp_frac - warmup_frac);
    std::array<double, 3> p;
    p[1] = final_probs[1] * ramp;
    p[2] = final_probs[2] * ramp;
    p[0] = 1.0 - p[1] - p[2];
    return p;
}

Task sample_task(int64_t iter, const TaskSchedule& sched, Rng& rng) {
    if (iter < 0) throw ShapeError("sample_task: iter must be >= 0");
    const auto p = sched.probs(iter);
    const double u = rng.uniform();
    if (u < p[0]) return Task::recon;
    if (u < p[0] + p[1]) return Task::interp;
    return Task::extrap;
}

std::pair<VideoClip, TargetSpec> make_target(const VideoClip& source,
                                             Task task, int param, int k,
                                             int source_rate) {
    if (source_rate < 1) throw ShapeError("make_target: bad source rate");
    const int64_t T = source.t();
    const int64_t fe = source.h() * source.w() * 3;

    auto take = [&](const std::vector<int64_t>& idx) {
        VideoClip out;
        out.frames = Tensor({(int64_t)idx.size(), source.h(), source.w(), 3});
        out.frame_rate = source.frame_rate;
        out.source_id = source.source_id;
        for (size_t j = 0; j < idx.size(); ++j) {
            if (idx[j] < 0 || idx[j] >= T)
                throw ShapeError("make_target: source too short for task");
            std::copy(source.frames.data() + idx[j] * fe,
                      source.frames.data() + (idx[j] + 1) * fe,
                      out.frames.data() + (int64_t)j * fe);
        }
        return out;
    };

    TargetSpec spec;
    spec.task = task;
    VideoClip input;
    if (task == Task::recon) {
        std::vector<int64_t> in((size_t)k + 1);
        for (int i = 0; i <= k; ++i) in[(size_t)i] = (int64_t)i * source_rate;
        input = take(in);
        spec.coords = recon_coords(k);
        spec.x_target = input;
    } else if (task == Task::interp) {
        const int u = param;
        if (u < 2) throw ShapeError("make_target: interp factor must be >= 2");
        if (source_rate % u != 0)
            throw ShapeError(
                "make_target: interp x" + std::to_string(u) +
                " needs a source at a multiple of that rate (have " +
                std::to_string(source_rate) + "x)");
        spec.upsample_factor = u;
        std::vector<int64_t> in((size_t)k + 1), tgt((size_t)(u * k) + 1);
        for (int i = 0; i <= k; ++i) in[(size_t)i] = (int64_t)i * source_rate;
        for (int j = 0; j <= u * k; ++j)
            tgt[(size_t)j] = (int64_t)j * (source_rate / u);
        input = take(in);
        spec.x_target = take(tgt);
        spec.coords.resize((size_t)(u * k) + 1);
        for (int j = 0; j <= u * k; ++j)
            spec.coords[(size_t)j] = (double)j / (double)(u * k);
    } else {
        const int s = param;
        if (s == 0) throw ShapeError("make_target: extrap shift must be != 0");
        spec.shift_frames = s;
        const int o = std::max(0, -s);
        std::vector<int64_t> in((size_t)k + 1), tgt((size_t)k + 1);
        for (int i = 0; i <= k; ++i) {
            in[(size_t)i] = (int64_t)(o + i) * source_rate;
            tgt[(size_t)i] = (int64_t)(o + s + i) * source_rate;
        }
        input = take(in);
        spec.x_target = take(tgt);
        spec.coords.resize((size_t)k + 1);
        for (int i = 0; i <= k; ++i)
            spec.coords[(size_t)i] = (double)(i + s) / (double)k;
    }
    return {std::move(input), std::move(spec)};
}

Batch mixed_batch(int64_t num_images, int64_t num_videos,
                  double image_fraction, int image_batch, int video_batch,
                  Rng& rng) {
    Batch b;
    b.is_image = rng.uniform() < image_fraction;
    if (b.is_image && num_images == 0)
        throw ShapeError("mixed_batch: image batch drawn but no image source");
    if (!b.is_image && num_videos == 0)
        throw ShapeError("mixed_batch: video batch drawn but no video source");
    const int64_t pool = b.is_image ? num_images : num_videos;
    const int n = b.is_image ? image_batch : video_batch;
    for (int i = 0; i < n; ++i) b.indices.push_back(rng.uniform_int(pool));
    return b;
}

}  // namespace regen
