#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "model_test_util.hpp"
#include "regen/codec/checkpoint.hpp"
#include "regen/codec/latent_file.hpp"
#include "regen/model/embedder.hpp"
#include "regen/train/trainer.hpp"

using namespace regen;
using namespace regen::testutil;
namespace fs = std::filesystem;

namespace {

fs::path tmp() {
    auto p = fs::temp_directory_path() / "regen_test_codec";
    fs::create_directories(p);
    return p;
}

LatentFile make_lf(uint64_t seed, int chunks) {
    LatentFile lf;
    lf.k = 4;
    lf.orig_t = chunks * 5;
    lf.orig_h = 64;
    lf.orig_w = 64;
    Rng rng(seed);
    for (int i = 0; i < chunks; ++i) {
        LatentChunk c;
        c.z_c = Tensor({8, 8, 8});
        Tensor zm({8, 8, 8});
        rng.fill_normal(c.z_c);
        rng.fill_normal(zm);
        c.z_m = zm;
        lf.chunks.push_back(std::move(c));
    }
    return lf;
}

}  // namespace

TEST_CASE("latent file f32 roundtrip is bit-identical") {
    auto lf = make_lf(1, 3);
    const auto path = tmp() / "a.rglt";
    write_latent_file(lf, path);
    auto back = read_latent_file(path);
    CHECK(back.k == 4);
    CHECK(back.m == 8);
    CHECK(back.c_lat == 8);
    CHECK(back.orig_t == 15);
    REQUIRE(back.chunks.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(max_abs_diff(back.chunks[i].z_c, lf.chunks[i].z_c) == 0.0);
        CHECK(max_abs_diff(*back.chunks[i].z_m, *lf.chunks[i].z_m) == 0.0);
    }
    // exact size: 37-byte header + 3 chunks * 2 maps * 8*8*8 * 4 bytes
    CHECK(fs::file_size(path) == 37 + 3 * 2 * 8 * 8 * 8 * 4);
}

TEST_CASE("latent file f16 path") {
    auto lf = make_lf(2, 2);
    lf.f16 = true;
    const auto path = tmp() / "b.rglt";
    write_latent_file(lf, path);
    CHECK(fs::file_size(path) == 37 + 2 * 2 * 8 * 8 * 8 * 2);
    auto back = read_latent_file(path);
    CHECK(back.f16);
    // half precision keeps ~3 decimal digits for values around 1
    CHECK(max_abs_diff(back.chunks[0].z_c, lf.chunks[0].z_c) < 5e-3);
}

TEST_CASE("half conversion") {
    for (float v : {0.f, 1.f, -1.f, 0.5f, -0.25f, 65504.f}) {
        CHECK(half_to_float(float_to_half(v)) == v);  // exactly representable
    }
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const float v = (float)rng.uniform(-8, 8);
        const float b = half_to_float(float_to_half(v));
        CHECK(std::abs(v - b) <= std::abs(v) * 1e-3 + 1e-4);
    }
}

TEST_CASE("latent file corruption detected") {
    auto lf = make_lf(4, 2);
    const auto path = tmp() / "c.rglt";
    write_latent_file(lf, path);
    // truncate: payload size no longer matches the header
    fs::resize_file(path, fs::file_size(path) - 8);
    CHECK_THROWS_AS(read_latent_file(path), FormatError);
    std::ofstream bad(tmp() / "bad.rglt", std::ios::binary);
    bad << "JUNKJUNKJUNK";
    bad.close();
    CHECK_THROWS_AS(read_latent_file(tmp() / "bad.rglt"), FormatError);
    CHECK_THROWS_AS(read_latent_file(tmp() / "missing.rglt"), IoError);
}

TEST_CASE("checkpoint roundtrip preserves model behavior bit-exactly") {
    RegenModel<float> m(tiny_config(4));
    randomize(m, 5, 0.05);
    const auto path = tmp() / "m.rgck";
    save_checkpoint(path, m);
    CHECK(checkpoint_kind(path) == "regen");
    auto loaded = load_regen(path);
    auto clip = random_clip(6, 5, 16, 16);
    auto a = encode_chunk(m, clip);
    auto b = encode_chunk(*loaded, clip);
    CHECK(max_abs_diff(a.z_c, b.z_c) == 0.0);
    CHECK(max_abs_diff(*a.z_m, *b.z_m) == 0.0);
    // denoise path too
    Tensor z_e = m.expand_values(a.z_c, &*a.z_m, recon_coords(4));
    Tensor z_e2 = loaded->expand_values(b.z_c, &*b.z_m, recon_coords(4));
    CHECK(max_abs_diff(z_e, z_e2) == 0.0);

    CHECK_THROWS_AS(load_baseline(path), CheckpointError);
    CHECK_THROWS_AS(load_regen(tmp() / "nope.rgck"), CheckpointError);
    std::ofstream junk(tmp() / "junk.rgck", std::ios::binary);
    junk << "NOTACKPT";
    junk.close();
    CHECK_THROWS_AS(checkpoint_kind(tmp() / "junk.rgck"), CheckpointError);
}

TEST_CASE("resume reproduces identical subsequent metrics") {
    TrainConfig tc;
    tc.k = 4;
    tc.iterations = 9;
    tc.video_batch = 1;
    tc.image_fraction = 0.0;
    tc.lr = 1e-3;
    tc.lr_warmup = 2;
    tc.seed = 7;
    tc.data.num_clips = 2;
    tc.data.h = 16;
    tc.data.w = 16;

    auto loss_fn = [](RegenModel<float>& m, const TrainConfig& cfg) {
        return [&m, &cfg](Graph& g, const VideoClip& src, bool is_image,
                          Task task, int param, Rng& rng) {
            if (is_image)
                return m.diffusion_loss(g, src.frames, src.frames, {0.0}, rng);
            auto [input, spec] =
                make_target(src, task, param, m.cfg.k, cfg.interp_factor);
            return m.diffusion_loss(g, input.frames, spec.x_target.frames,
                                    spec.coords, rng);
        };
    };

    // straight run: record metrics of iterations 5..8
    RegenModel<float> ma(tiny_config(4));
    Trainer tra(ma.params(), tc, loss_fn(ma, tc));
    std::vector<double> straight;
    for (int i = 0; i < 9; ++i) {
        auto s = tra.step();
        if (i >= 5) straight.push_back(s.loss);
    }

    // checkpointed run: stop after 5, save, reload, continue
    RegenModel<float> mb(tiny_config(4));
    Trainer trb(mb.params(), tc, loss_fn(mb, tc));
    for (int i = 0; i < 5; ++i) trb.step();
    TrainerSnapshot snap;
    snap.iter = trb.iter();
    snap.adam_t = trb.adam_t();
    snap.rng_state = trb.rng_state();
    const auto path = tmp() / "resume.rgck";
    save_checkpoint(path, mb, &snap);

    TrainerSnapshot snap2;
    auto mc = load_regen(path, &snap2);
    Trainer trc(mc->params(), tc, loss_fn(*mc, tc));
    trc.restore(snap2.iter, snap2.rng_state, snap2.adam_t);
    std::vector<double> resumed;
    for (int i = 5; i < 9; ++i) resumed.push_back(trc.step().loss);

    REQUIRE(straight.size() == resumed.size());
    for (size_t i = 0; i < straight.size(); ++i)
        CHECK(straight[i] == resumed[i]);
}
