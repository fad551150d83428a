#include "regen/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace regen {

std::vector<VideoClip> make_dense_sources(const SynthConfig& cfg, int k,
                                          int rate, int max_shift) {
    SynthConfig dense = cfg;
    // cover [ -max_shift, k+max_shift ] in chunk-frame units at `rate`x
    dense.t = (int64_t)rate * (k + 2 * max_shift) + 1;
    dense.velocity_range = cfg.velocity_range / (double)rate;
    return synth_dataset(dense);
}

std::vector<VideoClip> make_image_sources(const SynthConfig& cfg,
                                          int64_t count) {
    SynthConfig img = cfg;
    img.t = 1;
    img.num_clips = count;
    img.seed = splitmix64(cfg.seed ^ 0x696d67);
    return synth_dataset(img);
}

Trainer::Trainer(std::vector<Param*> params, const TrainConfig& cfg,
                 SampleLossFn loss_fn)
    : params_(std::move(params)),
      cfg_(cfg),
      loss_fn_(std::move(loss_fn)),
      rng_(splitmix64(cfg.seed ^ 0x747261696eull)) {
    opt_.weight_decay = cfg_.weight_decay;
    cfg_.tasks.total_iters = cfg_.iterations;
    int max_shift = 1;
    for (int s : cfg_.extrap_shifts) max_shift = std::max(max_shift, std::abs(s));
    source_rate_ = cfg_.interp_factor;
    videos_ = make_dense_sources(cfg_.data, cfg_.k, source_rate_, max_shift);
    if (cfg_.image_fraction > 0)
        images_ = make_image_sources(cfg_.data, cfg_.num_images);
}

StepMetrics Trainer::step() {
    const auto t0 = std::chrono::steady_clock::now();
    StepMetrics m;
    m.iter = iter_;

    const Batch batch = mixed_batch(
        (int64_t)images_.size(), (int64_t)videos_.size(), cfg_.image_fraction,
        cfg_.image_batch, cfg_.video_batch, rng_);

    Task task = Task::recon;
    int param = 0;
    if (!batch.is_image) {
        task = sample_task(iter_, cfg_.tasks, rng_);
        if (task == Task::interp) {
            param = cfg_.interp_factor;
        } else if (task == Task::extrap) {
            param = cfg_.extrap_shifts[(size_t)rng_.uniform_int(
                (int64_t)cfg_.extrap_shifts.size())];
        }
    }
    m.task = batch.is_image ? "image" : to_string(task);

    for (auto* p : params_) p->zero_grad();
    const double inv_b = 1.0 / (double)batch.indices.size();
    double loss_acc = 0;
    for (int64_t idx : batch.indices) {
        const VideoClip& src =
            batch.is_image ? images_[(size_t)idx] : videos_[(size_t)idx];
        Graph g;
        Var loss = loss_fn_(g, src, batch.is_image, task, param, rng_);
        loss_acc += (double)g.val(loss)[0];
        g.backward(op_scale(g, loss, inv_b));
    }
    m.loss = loss_acc * inv_b;
    if (!std::isfinite(m.loss))
        throw NonFiniteLossError("non-finite loss at iteration " +
                                 std::to_string(iter_));

    m.grad_norm = AdamW::clip_grads(params_, cfg_.grad_clip);
    const double lr =
        lr_at(iter_, cfg_.iterations, cfg_.lr, cfg_.lr_warmup);
    opt_.step(params_, lr);

    ++iter_;
    m.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return m;
}

void Trainer::run(const std::function<void(const StepMetrics&)>& on_step) {
    while (iter_ < cfg_.iterations) {
        StepMetrics m = step();
        if (on_step) on_step(m);
    }
}

void Trainer::restore(int64_t iter, const std::vector<uint64_t>& rng_state,
                      int64_t adam_t) {
    iter_ = iter;
    rng_.load_state(rng_state);
    opt_.t = adam_t;
}

void append_metrics_jsonl(const std::filesystem::path& path,
                          const StepMetrics& m) {
    nlohmann::ordered_json j;
    j["iter"] = m.iter;
    j["loss"] = m.loss;
    j["task"] = m.task;
    j["grad_norm"] = m.grad_norm;
    j["wallclock"] = m.wallclock_s;
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append metrics to " + path.string());
    out << j.dump() << "\n";
}

}  // namespace regen
