#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end tests of the regen binary: workflows and exit codes.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "regen/codec/checkpoint.hpp"
#include "regen/codec/latent_file.hpp"
#include "regen/core/rng.hpp"
#include "regen/video/io.hpp"

using namespace regen;
namespace fs = std::filesystem;

namespace {

fs::path work() {
    static const fs::path p = [] {
        auto d = fs::temp_directory_path() / "regen_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return p;
}

int run(const std::string& args) {
    const std::string cmd = std::string(REGEN_CLI_PATH) + " " + args +
                            " >" + (work() / "out.log").string() + " 2>" +
                            (work() / "err.log").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

const char* kTrainCfg = R"({
  "kind": "regen",
  "model": {"k": 4, "base_channels": 8, "gn_groups": 4, "siren_depth": 2,
            "siren_hidden": 16, "depth": 1, "heads": 2, "d_model": 32,
            "mlp_ratio": 2.0, "sched_steps": 50},
  "train": {"iterations": 8, "video_batch": 1, "image_batch": 1,
            "image_fraction": 0.25, "lr": 1e-3, "lr_warmup": 2, "seed": 1,
            "data": {"seed": 5, "num_clips": 2, "h": 16, "w": 16,
                     "velocity_range": 1.0},
            "num_images": 2, "save_every": 4, "log_every": 0,
            "out_dir": "OUTDIR"}
})";

void write_cfg(const fs::path& path, std::string body,
               const std::string& out_dir) {
    const auto pos = body.find("OUTDIR");
    body.replace(pos, 6, out_dir);
    std::ofstream f(path);
    f << body;
}

fs::path trained_ckpt() {
    static const fs::path ckpt = [] {
        const auto dir = work() / "run";
        write_cfg(work() / "cfg.json", kTrainCfg, dir.string());
        REQUIRE(run("train --config " + (work() / "cfg.json").string()) == 0);
        return dir / "ckpt.rgck";
    }();
    return ckpt;
}

}  // namespace

TEST_CASE("synth writes clips") {
    CHECK(run("synth --out " + (work() / "data").string() +
              " --clips 2 --frames 15 --height 16 --width 16 --seed 3") == 0);
    CHECK(fs::exists(work() / "data" / "clip_0000.rvid"));
    auto clip = load_clip(work() / "data" / "clip_0000.rvid",
                          ClipLayout::rawvid);
    CHECK(clip.t() == 15);
}

TEST_CASE("train smoke run writes a resumable checkpoint") {
    CHECK(fs::exists(trained_ckpt()));
    CHECK(checkpoint_kind(trained_ckpt()) == "regen");
    CHECK(fs::exists(trained_ckpt().parent_path() / "metrics.jsonl"));
    // resume runs to completion immediately (iterations already reached)
    CHECK(run("train --config " + (work() / "cfg.json").string() +
              " --resume " + trained_ckpt().string()) == 0);
}

TEST_CASE("invalid config key exits 1 naming the key") {
    std::string body = kTrainCfg;
    body.replace(body.find("\"lr\""), 4, "\"learning_rate\"");
    write_cfg(work() / "bad.json", body, (work() / "x").string());
    CHECK(run("train --config " + (work() / "bad.json").string()) == 1);
    CHECK(slurp(work() / "err.log").find("learning_rate") !=
          std::string::npos);
}

TEST_CASE("encode/decode workflow with exit codes") {
    trained_ckpt();
    const std::string ckpt = trained_ckpt().string();

    // 15-frame clip, k=4 -> 3 chunks of 2x2 latents
    REQUIRE(run("encode --in " + (work() / "data/clip_0000.rvid").string() +
                " --out " + (work() / "a.rglt").string() + " --ckpt " + ckpt) ==
            0);
    CHECK(fs::file_size(work() / "a.rglt") == 37 + 3 * 2 * 2 * 2 * 8 * 4);
    CHECK(slurp(work() / "out.log").find("r=48") != std::string::npos);

    // 17-frame clip -> chunking error, exit 2, pad hint 20
    CHECK(run("synth --out " + (work() / "d17").string() +
              " --clips 1 --frames 17 --height 16 --width 16") == 0);
    CHECK(run("encode --in " + (work() / "d17/clip_0000.rvid").string() +
              " --out " + (work() / "b.rglt").string() + " --ckpt " + ckpt) ==
          2);
    CHECK(slurp(work() / "err.log").find("20") != std::string::npos);

    // --k mismatch -> 4; bad checkpoint -> 3
    CHECK(run("encode --in " + (work() / "data/clip_0000.rvid").string() +
              " --out " + (work() / "c.rglt").string() + " --ckpt " + ckpt +
              " --k 8") == 4);
    std::ofstream(work() / "junk.rgck") << "junk";
    CHECK(run("encode --in " + (work() / "data/clip_0000.rvid").string() +
              " --out " + (work() / "c.rglt").string() + " --ckpt " +
              (work() / "junk.rgck").string()) == 3);

    // decode: steps 1 and steps 5 both succeed and differ
    REQUIRE(run("decode --in " + (work() / "a.rglt").string() + " --out " +
                (work() / "dec1.rvid").string() + " --ckpt " + ckpt +
                " --steps 1 --seed 3") == 0);
    REQUIRE(run("decode --in " + (work() / "a.rglt").string() + " --out " +
                (work() / "dec5.rvid").string() + " --ckpt " + ckpt +
                " --steps 5 --seed 3") == 0);
    auto d1 = load_clip(work() / "dec1.rvid", ClipLayout::rawvid);
    auto d5 = load_clip(work() / "dec5.rvid", ClipLayout::rawvid);
    CHECK(d1.t() == 15);
    CHECK(max_abs_diff(d1.frames, d5.frames) > 0.0);

    // CLI determinism: identical flags + seed -> identical artifacts
    REQUIRE(run("decode --in " + (work() / "a.rglt").string() + " --out " +
                (work() / "dec1b.rvid").string() + " --ckpt " + ckpt +
                " --steps 1 --seed 3") == 0);
    CHECK(slurp(work() / "dec1.rvid") == slurp(work() / "dec1b.rvid"));

    // smooth extend runs
    CHECK(run("decode --in " + (work() / "a.rglt").string() + " --out " +
              (work() / "dece.rvid").string() + " --ckpt " + ckpt +
              " --steps 2 --smooth extend") == 0);
    CHECK(load_clip(work() / "dece.rvid", ClipLayout::rawvid).t() == 15);

    // k mismatch between latent file and checkpoint -> 4
    {
        LatentFile lf;
        lf.k = 8;
        lf.orig_t = 9;
        lf.orig_h = 16;
        lf.orig_w = 16;
        LatentChunk c;
        c.z_c = Tensor({2, 2, 8});
        c.z_m = Tensor({2, 2, 8});
        lf.chunks.push_back(c);
        write_latent_file(lf, work() / "k8.rglt");
    }
    CHECK(run("decode --in " + (work() / "k8.rglt").string() + " --out " +
              (work() / "x.rvid").string() + " --ckpt " + ckpt) == 4);

    // token budget exceeded -> 5
    {
        auto model = load_regen(trained_ckpt());
        RegenConfig small = model->cfg;
        small.token_budget = 4;
        RegenModel<float> tiny(small);
        auto ps_src = model->params();
        auto ps_dst = tiny.params();
        for (size_t i = 0; i < ps_src.size(); ++i)
            ps_dst[i]->value = ps_src[i]->value.clone();
        save_checkpoint(work() / "tinybudget.rgck", tiny);
    }
    CHECK(run("decode --in " + (work() / "a.rglt").string() + " --out " +
              (work() / "x.rvid").string() + " --ckpt " +
              (work() / "tinybudget.rgck").string()) == 5);
}

TEST_CASE("retarget modes and shift bound") {
    trained_ckpt();
    const std::string ckpt = trained_ckpt().string();
    REQUIRE(fs::exists(work() / "a.rglt"));
    CHECK(run("retarget --ckpt " + ckpt + " --in " +
              (work() / "a.rglt").string() + " --out " +
              (work() / "interp.rvid").string() +
              " --mode interp2x --steps 1") == 0);
    CHECK(load_clip(work() / "interp.rvid", ClipLayout::rawvid).t() == 27);

    CHECK(run("retarget --ckpt " + ckpt + " --in " +
              (work() / "a.rglt").string() + " --out " +
              (work() / "ex.rvid").string() +
              " --mode extrap --shift 1 --steps 1") == 0);
    CHECK(load_clip(work() / "ex.rvid", ClipLayout::rawvid).t() == 15);

    CHECK(run("retarget --ckpt " + ckpt + " --in " +
              (work() / "a.rglt").string() + " --out " +
              (work() / "ex2.rvid").string() +
              " --mode extrap --shift 9 --steps 1") == 7);
}

TEST_CASE("eval writes a deterministic report with config echo") {
    trained_ckpt();
    const std::string ckpt = trained_ckpt().string();
    REQUIRE(run("eval --ckpt " + ckpt + " --data " +
                (work() / "data").string() + " --steps 1 --seed 2 --report " +
                (work() / "rep.json").string() + " --csv " +
                (work() / "rep.csv").string()) == 0);
    auto j = nlohmann::json::parse(slurp(work() / "rep.json"));
    CHECK(j["method"] == "regen");
    CHECK(j["k"] == 4);
    CHECK(j["n_steps"] == 1);
    CHECK(j["seed"] == 2);
    CHECK(j["videos"].size() == 2);
    CHECK(j.contains("rfvd"));
    const std::string csv = slurp(work() / "rep.csv");
    CHECK(csv.find("method,compression,psnr,ssim") == 0);

    // byte-identical on re-run
    REQUIRE(run("eval --ckpt " + ckpt + " --data " +
                (work() / "data").string() + " --steps 1 --seed 2 --report " +
                (work() / "rep2.json").string()) == 0);
    CHECK(slurp(work() / "rep.json") == slurp(work() / "rep2.json"));
}

TEST_CASE("train-baseline trains conv and in-context models") {
    const char* kBase = R"({
      "kind": "baseline",
      "model": {"k": 4, "base_channels": 8, "gn_groups": 4},
      "train": {"iterations": 4, "video_batch": 1, "lr": 1e-3,
                "data": {"num_clips": 1, "h": 16, "w": 16},
                "save_every": 0, "log_every": 0, "out_dir": "OUTDIR"}
    })";
    write_cfg(work() / "base.json", kBase, (work() / "baserun").string());
    CHECK(run("train-baseline --config " + (work() / "base.json").string()) ==
          0);
    CHECK(checkpoint_kind(work() / "baserun" / "ckpt.rgck") == "baseline");

    const char* kIc = R"({
      "kind": "incontext",
      "model": {"k": 4, "base_channels": 8, "gn_groups": 4, "depth": 1,
                "heads": 2, "d_model": 32, "mlp_ratio": 2.0,
                "sched_steps": 50},
      "train": {"iterations": 4, "video_batch": 1, "lr": 1e-3,
                "data": {"num_clips": 1, "h": 16, "w": 16},
                "save_every": 0, "log_every": 0, "out_dir": "OUTDIR"}
    })";
    write_cfg(work() / "ic.json", kIc, (work() / "icrun").string());
    CHECK(run("train-baseline --config " + (work() / "ic.json").string()) == 0);
    CHECK(checkpoint_kind(work() / "icrun" / "ckpt.rgck") == "incontext");

    // rejects a regen config
    write_cfg(work() / "wrongkind.json", kTrainCfg, (work() / "x").string());
    CHECK(run("train-baseline --config " +
              (work() / "wrongkind.json").string()) == 1);

    // baseline checkpoint evaluates too
    CHECK(run("eval --ckpt " + (work() / "baserun" / "ckpt.rgck").string() +
              " --data " + (work() / "data").string() + " --report " +
              (work() / "base_rep.json").string()) == 0);
}
