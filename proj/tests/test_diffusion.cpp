#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "model_test_util.hpp"
#include "regen/diffusion/sampler.hpp"
#include "regen/diffusion/schedule.hpp"

using namespace regen;
using namespace regen::testutil;

TEST_CASE("schedule endpoints, floor, monotonicity") {
    for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
        auto s = make_schedule(kind, 1000, 1e-3);
        CHECK(s.alpha[0] >= 1.0 - 1e-4);
        CHECK(s.alpha.back() == doctest::Approx(1e-3).epsilon(1e-9));
        double prev = 2;
        for (double a : s.alpha) {
            CHECK(a > 0.0);
            CHECK(a <= 1.0);
            CHECK(a < prev);
            CHECK(a >= 1e-3 - 1e-12);
            prev = a;
        }
    }
    CHECK_THROWS_AS(make_schedule(ScheduleKind::linear, 0, 1e-3), ShapeError);
    CHECK_THROWS_AS(schedule_kind_from_string("quadratic"), FormatError);
    // single-step schedule is just the floor
    auto s1 = make_schedule(ScheduleKind::cosine, 1, 1e-3);
    CHECK(s1.alpha[0] == doctest::Approx(1e-3));
}

TEST_CASE("forward_sample basics") {
    Tensor x0 = Tensor::full({4}, 1.f);
    Tensor eps = Tensor::zeros({4});
    auto a = forward_sample(x0, 1.0, eps);
    CHECK(max_abs_diff(a, x0) == 0.0);
    // scalar toy: x0=1, eps=0, alpha=0.25 -> 0.5
    auto b = forward_sample(x0, 0.25, eps);
    CHECK(b[0] == doctest::Approx(0.5));
    // alpha -> alpha_min with x0 = 0 gives ~eps
    Tensor z = Tensor::zeros({4});
    Tensor e = Tensor::full({4}, 0.7f);
    auto c = forward_sample(z, 1e-3, e);
    CHECK(c[0] == doctest::Approx(0.7 * std::sqrt(1 - 1e-3)));
    CHECK_THROWS_AS(forward_sample(x0, 0.5, Tensor::zeros({5})), ShapeError);
    CHECK_THROWS_AS(forward_sample(x0, 0.0, eps), ShapeError);
}

TEST_CASE("forward-process statistics (Eq. 2)") {
    Rng rng(5);
    const double x0 = 0.8;
    for (double a : {0.9, 0.5, 0.1}) {
        const int n = 10000;
        double mean = 0, var = 0;
        Tensor x0t = Tensor::full({1}, (float)x0);
        for (int i = 0; i < n; ++i) {
            Tensor eps({1});
            eps[0] = (float)rng.normal();
            const double xt = forward_sample(x0t, a, eps)[0];
            mean += xt;
            var += xt * xt;
        }
        mean /= n;
        var = var / n - mean * mean;
        CHECK(std::abs(mean - std::sqrt(a) * x0) <
              0.05 * std::abs(std::sqrt(a) * x0));
        CHECK(std::abs(var - (1 - a)) < 0.05 * (1 - a));
    }
}

TEST_CASE("loss: zero-predictor gives unit loss; oracle stub gives zero") {
    // freshly built model has a zero-initialized head => eps_hat == 0 and
    // loss = mean(eps^2) ~ 1
    RegenConfig cfg = tiny_config(4);
    cfg.dec.depth = 1;
    RegenModel<float> m(cfg);
    Rng rng(6);
    auto clip = random_clip(7, 5, 16, 16);
    double acc = 0;
    const int reps = 16;  // 16 * 3840 elements ~ 61k draws
    for (int i = 0; i < reps; ++i) {
        Graph g(false);
        Var l = m.diffusion_loss(g, clip.frames, clip.frames, recon_coords(4),
                                 rng);
        acc += g.val(l)[0];
    }
    CHECK(std::abs(acc / reps - 1.0) < 0.02);

    // oracle stub: eps_hat forced to eps exactly -> loss 0
    Graph g;
    Tensor eps({5, 16, 16, 3});
    rng.fill_normal(eps);
    Var stub = g.leaf(eps, false);
    Var l0 = op_mse(g, stub, eps);
    CHECK(g.val(l0)[0] == 0.f);
}

TEST_CASE("gradient flows into every component") {
    RegenConfig cfg = tiny_config(4);
    RegenModel<float> m(cfg);
    randomize(m, 8, 0.05);
    Rng rng(9);
    auto clip = random_clip(10, 5, 16, 16);
    Graph g;
    Var loss =
        m.diffusion_loss(g, clip.frames, clip.frames, recon_coords(4), rng);
    g.backward(loss);
    auto norm_of = [](std::vector<ParamT<float>*> ps) {
        double n = 0;
        for (auto* p : ps) n += kern::sum_sq(p->grad);
        return std::sqrt(n);
    };
    std::vector<ParamT<float>*> pe, pc, pd;
    m.enc.collect(pe);
    m.cond.collect(pc);
    m.dit.collect(pd);
    CHECK(norm_of(pe) > 0.0);
    CHECK(norm_of(pc) > 0.0);
    CHECK(norm_of(pd) > 0.0);
}

TEST_CASE("image-path loss reaches null_motion") {
    RegenConfig cfg = tiny_config(4);
    RegenModel<float> m(cfg);
    randomize(m, 11, 0.05);
    Rng rng(12);
    auto img = random_clip(13, 1, 16, 16);
    Graph g;
    Var loss = m.diffusion_loss(g, img.frames, img.frames, {0.0}, rng);
    g.backward(loss);
    CHECK(kern::sum_sq(m.cond.null_motion.grad) > 0.0);
}

TEST_CASE("sampling steps selection") {
    auto s = make_schedule(ScheduleKind::cosine, 1000, 1e-3);
    auto one = sampling_steps(s, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 999);
    auto four = sampling_steps(s, 4);
    REQUIRE(four.size() == 4);
    CHECK(four[0] == 999);
    for (size_t i = 1; i < four.size(); ++i) CHECK(four[i] < four[i - 1]);
}

TEST_CASE("one-step sampling equals the closed-form estimate bit-exactly") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 14, 0.05);
    auto clip = random_clip(15, 5, 16, 16);
    auto lat = encode_chunk(m, clip);
    DecodeOptions opt;
    opt.n_steps = 1;
    opt.seed = 77;
    auto coords = recon_coords(4);
    VideoClip out = sample(m, lat, coords, opt);

    // independent reimplementation of the x0-prediction formula
    const double a = m.sched.alpha.back();
    Tensor x({5, 16, 16, 3});
    const int64_t fe = 16 * 16 * 3;
    for (int64_t t = 0; t < 5; ++t) {
        Tensor fr({16, 16, 3});
        fill_normal_keyed(fr, 77,
                          (int64_t)std::llround(coords[(size_t)t] * 1e6));
        std::copy(fr.data(), fr.data() + fe, x.data() + t * fe);
    }
    Tensor z_e = m.expand_values(lat.z_c, &*lat.z_m, coords);
    Tensor eps = m.denoise_values(x, 1.0, z_e);
    Tensor x0(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double v = ((double)x[i] - std::sqrt(1 - a) * (double)eps[i]) /
                         std::sqrt(a);
        x0[i] = (float)std::clamp(std::clamp(v, -1.5, 1.5), -1.0, 1.0);
    }
    CHECK(max_abs_diff(out.frames, x0) == 0.0);
}

TEST_CASE("sampler determinism and seed sensitivity") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 16, 0.05);
    auto lat = encode_chunk(m, random_clip(17, 5, 16, 16));
    DecodeOptions opt;
    opt.n_steps = 4;
    opt.seed = 5;
    auto a = sample(m, lat, recon_coords(4), opt);
    auto b = sample(m, lat, recon_coords(4), opt);
    CHECK(max_abs_diff(a.frames, b.frames) == 0.0);
    opt.seed = 6;
    auto c = sample(m, lat, recon_coords(4), opt);
    CHECK(max_abs_diff(a.frames, c.frames) > 0.0);
    CHECK_THROWS_AS([&] {
        DecodeOptions bad;
        bad.n_steps = 0;
        sample(m, lat, recon_coords(4), bad);
    }(), ShapeError);
}

TEST_CASE("token budget enforced") {
    RegenConfig cfg = tiny_config(4);
    cfg.token_budget = 100;
    RegenModel<float> m(cfg);
    auto lat = encode_chunk(m, random_clip(18, 5, 64, 64));  // 320 tokens
    DecodeOptions opt;
    CHECK_THROWS_AS(sample(m, lat, recon_coords(4), opt), TokenBudgetError);
}

TEST_CASE("guided sampling: anchor contract and duplication") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 19, 0.05);
    auto clip = random_clip(20, 10, 16, 16);
    auto lats = encode_video(m, clip);
    REQUIRE(lats.size() == 2);
    DecodeOptions opt;
    opt.n_steps = 3;
    opt.seed = 1;

    SampleTrajectory traj;
    VideoClip first = sample(m, lats[0], recon_coords(4), opt, &traj, 4);
    REQUIRE(traj.states.size() == 3);
    VideoClip second = sample_guided(m, lats[1], traj, opt);
    CHECK(second.t() == 6);  // k+2 frames
    // frame 0 duplicates the previous chunk's decoded last frame exactly
    const int64_t fe = 16 * 16 * 3;
    for (int64_t i = 0; i < fe; ++i)
        CHECK(second.frames[i] == first.frames[4 * fe + i]);

    // anchor recorded at different steps is rejected
    DecodeOptions opt2 = opt;
    opt2.n_steps = 5;
    CHECK_THROWS_AS(sample_guided(m, lats[1], traj, opt2), ShapeError);
    // empty anchor rejected
    SampleTrajectory empty;
    CHECK_THROWS_AS(sample_guided(m, lats[1], empty, opt), ShapeError);
}

TEST_CASE("decode_video lengths for both smoothing modes") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 21, 0.05);
    auto clip = random_clip(22, 15, 16, 16);
    auto lats = encode_video(m, clip);
    DecodeOptions opt;
    opt.n_steps = 2;
    auto plain = decode_video(m, lats, SmoothMode::none, opt);
    CHECK(plain.t() == 15);
    auto smooth = decode_video(m, lats, SmoothMode::extend, opt);
    CHECK(smooth.t() == 15);
    CHECK(max_abs_diff(plain.frames, smooth.frames) > 0.0);
}

TEST_CASE("retarget coordinate grids") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 23, 0.05);
    auto lat = encode_chunk(m, random_clip(24, 5, 16, 16));
    DecodeOptions opt;
    auto interp = retarget_chunk(m, lat, RetargetMode::interp2x, 0, opt);
    CHECK(interp.t() == 9);
    auto extrap = retarget_chunk(m, lat, RetargetMode::extrap, 1, opt);
    CHECK(extrap.t() == 5);
    CHECK_THROWS_AS(retarget_chunk(m, lat, RetargetMode::extrap, 9, opt),
                    ShiftError);
}
