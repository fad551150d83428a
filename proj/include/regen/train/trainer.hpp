#pragma once

// Training loop: mixed image/video batches, task sampling, AdamW updates,
// JSON-lines metrics. Model-specific per-sample losses are injected so the
// same loop drives the REGEN model and both baselines.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "regen/train/optim.hpp"
#include "regen/train/tasks.hpp"
#include "regen/video/synth.hpp"

namespace regen {

struct TrainConfig {
    int k = 4;
    int64_t iterations = 2000;
    int image_batch = 2;
    int video_batch = 2;
    double image_fraction = 0.2;
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double grad_clip = 1.0;
    int64_t lr_warmup = 100;
    uint64_t seed = 0;
    TaskSchedule tasks;
    int interp_factor = 2;
    std::vector<int> extrap_shifts = {-1, 1};

    // synthetic data source
    SynthConfig data;          // h/w/t/velocity describe the video clips
    int64_t num_images = 32;   // static single-frame clips

    int64_t save_every = 500;
    int64_t log_every = 25;
    std::string out_dir;
};

struct StepMetrics {
    int64_t iter = 0;
    double loss = 0;
    double grad_norm = 0;
    std::string task;
    double wallclock_s = 0;
};

// Per-sample loss builder: returns the (unscaled) loss Var for one source
// clip under the given task. `task` is Task::recon for image samples.
using SampleLossFn = std::function<Var(Graph&, const VideoClip& source,
                                       bool is_image, Task task, int param,
                                       Rng& rng)>;

class Trainer {
public:
    Trainer(std::vector<Param*> params, const TrainConfig& cfg,
            SampleLossFn loss_fn);

    // One optimizer update; throws NonFiniteLossError on divergence.
    StepMetrics step();

    // Runs until cfg.iterations, invoking on_step after each update.
    void run(const std::function<void(const StepMetrics&)>& on_step = {});

    int64_t iter() const { return iter_; }

    // resume support
    std::vector<uint64_t> rng_state() const { return rng_.save_state(); }
    int64_t adam_t() const { return opt_.t; }
    void restore(int64_t iter, const std::vector<uint64_t>& rng_state,
                 int64_t adam_t);

    const std::vector<VideoClip>& videos() const { return videos_; }
    const std::vector<VideoClip>& images() const { return images_; }
    int source_rate() const { return source_rate_; }

private:
    std::vector<Param*> params_;
    TrainConfig cfg_;
    SampleLossFn loss_fn_;
    AdamW opt_;
    Rng rng_;
    int64_t iter_ = 0;
    int source_rate_ = 2;
    std::vector<VideoClip> videos_;  // dense sources
    std::vector<VideoClip> images_;
};

// Append one metrics line ({"iter":..,"loss":..,"task":..,...}) to a file.
void append_metrics_jsonl(const std::filesystem::path& path,
                          const StepMetrics& m);

// Dense synthetic training sources: videos at `rate`x temporal density
// (velocity scaled down accordingly) and static image clips.
std::vector<VideoClip> make_dense_sources(const SynthConfig& cfg, int k,
                                          int rate, int max_shift);
std::vector<VideoClip> make_image_sources(const SynthConfig& cfg,
                                          int64_t count);

}  // namespace regen
