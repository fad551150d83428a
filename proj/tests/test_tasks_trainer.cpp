#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "json.hpp"
#include "model_test_util.hpp"
#include "regen/train/trainer.hpp"

using namespace regen;
using namespace regen::testutil;

TEST_CASE("make_target: reconstruction") {
    auto src = random_clip(1, 5, 16, 16);
    auto [input, spec] = make_target(src, Task::recon, 0, 4);
    CHECK(spec.coords == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
    CHECK(max_abs_diff(input.frames, src.frames) == 0.0);
    CHECK(max_abs_diff(spec.x_target.frames, input.frames) == 0.0);
}

TEST_CASE("make_target: interpolation x2 needs a dense source") {
    auto src = random_clip(2, 9, 16, 16);  // 2x-dense over 5 chunk frames
    auto [input, spec] = make_target(src, Task::interp, 2, 4, 2);
    CHECK(input.t() == 5);
    CHECK(spec.x_target.t() == 9);
    REQUIRE(spec.coords.size() == 9);
    CHECK(spec.coords[1] == doctest::Approx(0.125));
    CHECK(spec.coords[8] == doctest::Approx(1.0));
    // input frames are the even source frames
    const int64_t fe = 16 * 16 * 3;
    for (int i = 0; i <= 4; ++i)
        for (int64_t j = 0; j < fe; ++j)
            CHECK(input.frames[i * fe + j] == src.frames[2 * i * fe + j]);
    // a 1x source cannot supply interp ground truth
    CHECK_THROWS_AS(make_target(src, Task::interp, 2, 4, 1), ShapeError);
}

TEST_CASE("make_target: extrapolation shifts") {
    auto src = random_clip(3, 6, 16, 16);
    auto [in_m1, spec_m1] = make_target(src, Task::extrap, -1, 4);
    CHECK(spec_m1.coords ==
          std::vector<double>{-0.25, 0.0, 0.25, 0.5, 0.75});
    const int64_t fe = 16 * 16 * 3;
    // input = frames 1..5, target = frames 0..4
    for (int64_t j = 0; j < fe; ++j) {
        CHECK(in_m1.frames[j] == src.frames[fe + j]);
        CHECK(spec_m1.x_target.frames[j] == src.frames[j]);
    }
    auto [in_p1, spec_p1] = make_target(src, Task::extrap, +1, 4);
    CHECK(spec_p1.coords[4] == doctest::Approx(1.25));
    for (int64_t j = 0; j < fe; ++j)
        CHECK(spec_p1.x_target.frames[j] == src.frames[fe + j]);

    // coordinate consistency: target frame j sits at source frame
    // (o + s + j) in chunk-frame units = coords[j]*k + o
    for (size_t j = 0; j < spec_p1.coords.size(); ++j)
        CHECK(spec_p1.coords[j] * 4 == doctest::Approx((double)j + 1));

    CHECK_THROWS_AS(make_target(random_clip(4, 5, 16, 16), Task::extrap, 1, 4),
                    ShapeError);  // too short for the shift
}

TEST_CASE("task schedule: sums to one, default shape") {
    TaskSchedule s;
    s.total_iters = 1000;
    auto early = s.probs(0);
    CHECK(early[0] == 1.0);
    auto mid = s.probs(350);  // halfway through the ramp
    CHECK(mid[0] == doctest::Approx(1.0 - 0.2 * 0.5 - 0.2 * 0.5));
    auto late = s.probs(900);
    CHECK(late[0] == doctest::Approx(0.6));
    CHECK(late[1] == doctest::Approx(0.2));
    for (int64_t it : {0L, 100L, 250L, 499L, 500L, 999L}) {
        auto p = s.probs(it);
        CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
        for (double v : p) CHECK(v >= 0.0);
    }
}

TEST_CASE("sample_task distributions") {
    TaskSchedule recon_only;
    recon_only.final_probs = {1, 0, 0};
    recon_only.total_iters = 100;
    Rng rng(5);
    for (int i = 0; i < 200; ++i)
        CHECK(sample_task(99, recon_only, rng) == Task::recon);

    TaskSchedule s;
    s.warmup_frac = 0;
    s.ramp_frac = 0;  // final probs from iteration 0
    s.final_probs = {0.6, 0.2, 0.2};
    s.total_iters = 100;
    int counts[3] = {0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[(int)sample_task(50, s, rng)];
    CHECK(std::abs(counts[0] / (double)n - 0.6) < 0.01);
    CHECK(std::abs(counts[1] / (double)n - 0.2) < 0.01);
    CHECK(std::abs(counts[2] / (double)n - 0.2) < 0.01);
    CHECK_THROWS_AS(sample_task(-1, s, rng), ShapeError);
}

TEST_CASE("mixed_batch is homogeneous with the right rate") {
    Rng rng(6);
    int images = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Batch b = mixed_batch(8, 8, 0.2, 3, 2, rng);
        if (b.is_image) {
            ++images;
            CHECK(b.indices.size() == 3);
        } else {
            CHECK(b.indices.size() == 2);
        }
    }
    CHECK(std::abs(images / (double)n - 0.2) < 0.01);

    Rng rng2(7);
    for (int i = 0; i < 50; ++i)
        CHECK_FALSE(mixed_batch(8, 8, 0.0, 2, 2, rng2).is_image);
    CHECK_THROWS_AS(mixed_batch(0, 8, 1.0, 2, 2, rng2), ShapeError);
}

namespace {

TrainConfig smoke_cfg(int iters) {
    TrainConfig tc;
    tc.k = 4;
    tc.iterations = iters;
    tc.video_batch = 1;
    tc.image_batch = 1;
    tc.image_fraction = 0.25;
    tc.lr = 2e-3;
    tc.lr_warmup = 10;
    tc.grad_clip = 1.0;
    tc.seed = 3;
    tc.data.seed = 11;
    tc.data.num_clips = 2;
    tc.data.h = 16;
    tc.data.w = 16;
    tc.data.velocity_range = 1.0;
    tc.num_images = 2;
    return tc;
}

SampleLossFn regen_loss_fn(RegenModel<float>& m, const TrainConfig& tc) {
    return [&m, &tc](Graph& g, const VideoClip& src, bool is_image, Task task,
                     int param, Rng& rng) {
        if (is_image)
            return m.diffusion_loss(g, src.frames, src.frames, {0.0}, rng);
        auto [input, spec] =
            make_target(src, task, param, m.cfg.k, tc.interp_factor);
        return m.diffusion_loss(g, input.frames, spec.x_target.frames,
                                spec.coords, rng);
    };
}

}  // namespace

TEST_CASE("train_step: lr=0 leaves parameters unchanged") {
    RegenModel<float> m(tiny_config(4));
    TrainConfig tc = smoke_cfg(5);
    tc.lr = 0.0;
    tc.lr_warmup = 0;
    Trainer tr(m.params(), tc, regen_loss_fn(m, tc));
    std::vector<Tensor> before;
    for (auto* p : m.params()) before.push_back(p->value.clone());
    auto metrics = tr.step();
    CHECK(std::isfinite(metrics.loss));
    auto ps = m.params();
    for (size_t i = 0; i < ps.size(); ++i)
        CHECK(max_abs_diff(ps[i]->value, before[i]) == 0.0);
}

TEST_CASE("train_step: grad norm reported at most the clip threshold") {
    RegenModel<float> m(tiny_config(4));
    TrainConfig tc = smoke_cfg(5);
    tc.grad_clip = 1e-6;  // force clipping
    Trainer tr(m.params(), tc, regen_loss_fn(m, tc));
    for (int i = 0; i < 3; ++i) {
        auto metrics = tr.step();
        CHECK(metrics.grad_norm <= 1e-6 + 1e-12);
    }
}

TEST_CASE("loss decreases over 200 steps on a fixed toy batch") {
    RegenModel<float> m(tiny_config(4));
    TrainConfig tc = smoke_cfg(200);
    tc.data.num_clips = 1;       // a single source clip = fixed batch
    tc.image_fraction = 0.0;
    tc.tasks.final_probs = {1, 0, 0};
    Trainer tr(m.params(), tc, regen_loss_fn(m, tc));
    double first = 0, last = 0;
    for (int i = 0; i < 200; ++i) {
        auto metrics = tr.step();
        if (i < 25) first += metrics.loss;
        if (i >= 175) last += metrics.loss;
    }
    CHECK(last / 25.0 < first / 25.0);
}

TEST_CASE("end-to-end gradients reach all parameter groups in a step") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 42, 0.05);
    TrainConfig tc = smoke_cfg(5);
    tc.image_fraction = 0.0;
    Trainer tr(m.params(), tc, regen_loss_fn(m, tc));
    tr.step();
    // grads were consumed by the optimizer; check persistence by another
    // manual loss/backward instead
    Rng rng(9);
    Graph g;
    auto [input, spec] =
        make_target(tr.videos()[0], Task::recon, 0, 4, tr.source_rate());
    Var loss = m.diffusion_loss(g, input.frames, spec.x_target.frames,
                                spec.coords, rng);
    for (auto* p : m.params()) p->zero_grad();
    g.backward(loss);
    double enc_n = 0, cond_n = 0, dit_n = 0;
    std::vector<ParamT<float>*> pe, pc, pd;
    m.enc.collect(pe);
    m.cond.collect(pc);
    m.dit.collect(pd);
    for (auto* p : pe) enc_n += kern::sum_sq(p->grad);
    for (auto* p : pc) cond_n += kern::sum_sq(p->grad);
    for (auto* p : pd) dit_n += kern::sum_sq(p->grad);
    CHECK(enc_n > 0);
    CHECK(cond_n > 0);
    CHECK(dit_n > 0);
}

TEST_CASE("metrics jsonl append") {
    auto path = std::filesystem::temp_directory_path() / "regen_metrics.jsonl";
    std::filesystem::remove(path);
    StepMetrics m;
    m.iter = 3;
    m.loss = 0.5;
    m.task = "recon";
    m.grad_norm = 0.9;
    m.wallclock_s = 0.01;
    append_metrics_jsonl(path, m);
    append_metrics_jsonl(path, m);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        auto j = nlohmann::json::parse(line);
        CHECK(j["iter"] == 3);
        CHECK(j["task"] == "recon");
    }
    CHECK(lines == 2);
}
