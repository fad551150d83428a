#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "model_test_util.hpp"
#include "regen/model/embedder.hpp"

using namespace regen;
using namespace regen::testutil;

TEST_CASE("encode_chunk shape contract") {
    RegenModel<float> m(tiny_config(4));
    auto lat = encode_chunk(m, random_clip(1, 5, 64, 64));
    CHECK(lat.z_c.shape == Shape{8, 8, 8});
    REQUIRE(lat.z_m.has_value());
    CHECK(lat.z_m->shape == Shape{8, 8, 8});
    CHECK(lat.z_c.all_finite());
    CHECK(lat.z_m->all_finite());
}

TEST_CASE("encoder causality: z_c depends only on frame 0") {
    RegenModel<float> m(tiny_config(4));
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        auto clip = random_clip(100 + (uint64_t)trial, 5, 32, 32);
        auto base = encode_chunk(m, clip);
        // perturb frames 1..k
        VideoClip pert = clip;
        pert.frames = clip.frames.clone();
        const int64_t fe = 32 * 32 * 3;
        for (int64_t i = fe; i < pert.frames.numel(); ++i)
            pert.frames[i] = (float)std::clamp(
                (double)pert.frames[i] + 0.3 * rng.normal(), -1.0, 1.0);
        auto moved = encode_chunk(m, pert);
        CHECK(max_abs_diff(base.z_c, moved.z_c) == 0.0);  // bit-identical
        CHECK(max_abs_diff(*base.z_m, *moved.z_m) > 0.0);

        // perturb frame 0 only
        VideoClip p0 = clip;
        p0.frames = clip.frames.clone();
        p0.frames[0] = std::clamp(p0.frames[0] + 0.5f, -1.f, 1.f);
        if (p0.frames[0] == clip.frames[0]) p0.frames[0] -= 0.5f;
        auto moved0 = encode_chunk(m, p0);
        CHECK(max_abs_diff(base.z_c, moved0.z_c) > 0.0);
    }
}

TEST_CASE("encode_image consistent with chunk frame 0") {
    RegenModel<float> m(tiny_config(4));
    auto clip = random_clip(3, 5, 32, 32);
    auto lat_img = encode_image(m, frame_of(clip, 0));
    CHECK(lat_img.z_c.shape == Shape{4, 4, 8});
    CHECK_FALSE(lat_img.z_m.has_value());
    auto lat_chunk = encode_chunk(m, clip);
    // replicate causal padding makes the two paths identical
    CHECK(max_abs_diff(lat_img.z_c, lat_chunk.z_c) == 0.0);
}

TEST_CASE("encode length errors") {
    RegenModel<float> m(tiny_config(4));
    CHECK_THROWS_AS(encode_chunk(m, random_clip(4, 4, 32, 32)), ShapeError);
    CHECK_THROWS_AS(encode_image(m, random_clip(5, 2, 32, 32)), ShapeError);
    CHECK_THROWS_AS(encode_chunk(m, random_clip(6, 5, 30, 32)), ShapeError);
}

TEST_CASE("encode_video chunk count and independence") {
    RegenModel<float> m(tiny_config(4));
    auto clip = random_clip(8, 15, 32, 32);
    auto lats = encode_video(m, clip);
    REQUIRE(lats.size() == 3);  // 6 latent frames total
    // chunks encode independently: re-encoding chunk 1 alone matches
    auto chunks = chunk(clip, ChunkSpec{4});
    auto solo = encode_chunk(m, chunks[1]);
    CHECK(max_abs_diff(solo.z_c, lats[1].z_c) == 0.0);
    CHECK(max_abs_diff(*solo.z_m, *lats[1].z_m) == 0.0);

    CHECK_THROWS_AS(encode_video(m, random_clip(9, 17, 32, 32)), ChunkError);
}

TEST_CASE("132-frame k=32 video yields 8 latent frames") {
    RegenConfig cfg = tiny_config(32);
    cfg.enc = default_encoder_config(32, 8);
    cfg.enc.gn_groups = 4;
    RegenModel<float> m(cfg);
    auto lats = encode_video(m, random_clip(10, 132, 16, 16));
    CHECK(lats.size() == 4);  // 4 chunks x (z_c + z_m) = 8 latent frames
    CHECK(lats[0].z_c.shape == Shape{2, 2, 8});
}

TEST_CASE("fully convolutional: latent grid follows input size") {
    RegenModel<float> m(tiny_config(4));
    auto a = encode_chunk(m, random_clip(11, 5, 32, 48));
    CHECK(a.z_c.shape == Shape{4, 6, 8});
    auto b = encode_chunk(m, random_clip(12, 5, 64, 96));
    CHECK(b.z_c.shape == Shape{8, 12, 8});
}

TEST_CASE("encoder config validation") {
    EncoderConfig bad = default_encoder_config(4);
    bad.k = 5;
    CHECK_THROWS_AS(bad.validate(), ShapeError);
    // stride products for all supported k
    for (int k : {4, 8, 16, 32}) {
        EncoderConfig cfg = default_encoder_config(k);
        cfg.validate();
        int tp = 1;
        for (auto& s : cfg.stages()) tp *= s.st;
        CHECK(tp == k);
    }
}
