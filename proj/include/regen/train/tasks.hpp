#pragma once

// Target construction for reconstruction / interpolation / extrapolation,
// and the task-probability schedule.

#include <array>
#include <string>
#include <vector>

#include "regen/core/rng.hpp"
#include "regen/video/clip.hpp"

namespace regen {

enum class Task { recon = 0, interp = 1, extrap = 2 };

std::string to_string(Task t);

struct TargetSpec {
    Task task = Task::recon;
    std::vector<double> coords;
    VideoClip x_target;
    int upsample_factor = 1;  // interp
    int shift_frames = 0;     // extrap
};

// Piecewise-linear probabilities over training progress: pure recon until
// `warmup_frac`, linear ramp to `final_probs` at `ramp_frac`, constant
// after. Sums to 1 at every iteration.
struct TaskSchedule {
    double warmup_frac = 0.2;
    double ramp_frac = 0.5;
    std::array<double, 3> final_probs = {0.6, 0.2, 0.2};
    int64_t total_iters = 1;

    std::array<double, 3> probs(int64_t iter) const;
};

Task sample_task(int64_t iter, const TaskSchedule& sched, Rng& rng);

// Build (input_chunk, target) from a source clip sampled at `source_rate`
// frames per chunk-frame unit (training sources are 2x-dense so interp x2
// has ground truth; source_rate=1 suits plain clips).
//   recon:       input = target = frames {0..k}
//   interp xu:   coords {j/(uk)}, target is the u-dense frame set
//   extrap s:    coords {(i+s)/k}, target time-shifted by s frames
std::pair<VideoClip, TargetSpec> make_target(const VideoClip& source,
                                             Task task, int param, int k,
                                             int source_rate = 1);

// Homogeneous batch selection: all-image with probability image_fraction.
struct Batch {
    bool is_image = false;
    std::vector<int64_t> indices;
};

Batch mixed_batch(int64_t num_images, int64_t num_videos,
                  double image_fraction, int image_batch, int video_batch,
                  Rng& rng);

}  // namespace regen
