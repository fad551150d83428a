// regen: command-line codec surface.
//   synth | encode | decode | train | train-baseline | eval | retarget
//
// Exit codes: 1 invalid config key / usage, 2 chunking error (pad hint on
// stderr), 3 bad checkpoint, 4 k mismatch, 5 token budget exceeded,
// 6 non-finite training loss (last saved checkpoint retained), 7 bad
// retarget shift, 10 other errors.

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "regen/codec/checkpoint.hpp"
#include "regen/codec/latent_file.hpp"
#include "regen/eval/eval.hpp"
#include "regen/model/embedder.hpp"
#include "regen/train/trainer.hpp"
#include "regen/video/io.hpp"
#include "regen/video/synth.hpp"

namespace fs = std::filesystem;
using namespace regen;

namespace {

void diag(const std::string& kind, const std::string& msg,
          const nlohmann::ordered_json& extra = {}) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = msg;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = *it;
    std::cerr << j.dump() << std::endl;
}

void apply_determinism_env() {
    const char* v = std::getenv("REGEN_DETERMINISTIC");
    if (v && std::string(v) == "1") {
        omp_set_dynamic(0);
        const char* th = std::getenv("REGEN_THREADS");
        if (th) omp_set_num_threads(std::max(1, std::atoi(th)));
    }
}

std::vector<VideoClip> load_dataset(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::exists(dir)) throw IoError("no such data path: " + dir.string());
    if (!fs::is_directory(dir)) {
        files.push_back(dir);
    } else {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_regular_file() && e.path().extension() == ".rvid")
                files.push_back(e.path());
            else if (e.is_directory() && fs::exists(e.path() / "meta.json"))
                files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw IoError("no clips found in " + dir.string());
    std::vector<VideoClip> out;
    for (const auto& f : files) out.push_back(load_clip(f, detect_layout(f)));
    return out;
}

struct ParsedTrainFile {
    std::string kind;
    nlohmann::json model;
    TrainConfig train;
};

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok)
            throw ConfigError(scope + "." + it.key(),
                              "unknown config key: " + scope + "." + it.key());
    }
}

ParsedTrainFile parse_train_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("<parse>", "config is not valid JSON: " +
                                         std::string(e.what()));
    }
    check_keys(j, {"kind", "model", "train"}, "");
    ParsedTrainFile out;
    out.kind = j.value("kind", std::string("regen"));
    if (out.kind != "regen" && out.kind != "baseline" && out.kind != "incontext")
        throw ConfigError("kind", "unknown model kind: " + out.kind);
    out.model = j.value("model", nlohmann::json::object());

    const auto t = j.value("train", nlohmann::json::object());
    check_keys(t,
               {"iterations", "image_batch", "video_batch", "image_fraction",
                "lr", "weight_decay", "grad_clip", "lr_warmup", "seed",
                "interp_factor", "extrap_shifts", "warmup_frac", "ramp_frac",
                "final_probs", "data", "num_images", "save_every", "log_every",
                "out_dir"},
               "train");
    TrainConfig& tc = out.train;
    tc.iterations = t.value("iterations", (int64_t)2000);
    tc.image_batch = t.value("image_batch", 2);
    tc.video_batch = t.value("video_batch", 2);
    tc.image_fraction = t.value("image_fraction", 0.2);
    tc.lr = t.value("lr", 1e-4);
    tc.weight_decay = t.value("weight_decay", 1e-4);
    tc.grad_clip = t.value("grad_clip", 1.0);
    tc.lr_warmup = t.value("lr_warmup", (int64_t)100);
    tc.seed = t.value("seed", (uint64_t)0);
    tc.interp_factor = t.value("interp_factor", 2);
    if (t.contains("extrap_shifts"))
        tc.extrap_shifts = t["extrap_shifts"].get<std::vector<int>>();
    tc.tasks.warmup_frac = t.value("warmup_frac", 0.2);
    tc.tasks.ramp_frac = t.value("ramp_frac", 0.5);
    if (t.contains("final_probs")) {
        auto fp = t["final_probs"].get<std::vector<double>>();
        if (fp.size() != 3)
            throw ConfigError("train.final_probs", "need exactly 3 values");
        tc.tasks.final_probs = {fp[0], fp[1], fp[2]};
    }
    if (t.contains("data")) {
        const auto& d = t["data"];
        check_keys(d,
                   {"seed", "num_clips", "shapes_per_clip", "h", "w",
                    "velocity_range"},
                   "train.data");
        tc.data.seed = d.value("seed", (uint64_t)0);
        tc.data.num_clips = d.value("num_clips", (int64_t)64);
        tc.data.shapes_per_clip = d.value("shapes_per_clip", 1);
        tc.data.h = d.value("h", (int64_t)64);
        tc.data.w = d.value("w", (int64_t)64);
        tc.data.velocity_range = d.value("velocity_range", 2.0);
    }
    tc.num_images = t.value("num_images", (int64_t)32);
    tc.save_every = t.value("save_every", (int64_t)500);
    tc.log_every = t.value("log_every", (int64_t)25);
    tc.out_dir = t.value("out_dir", std::string("runs/default"));
    return out;
}

// ------------------------------------------------------------- commands

int cmd_synth(const fs::path& out_dir, const SynthConfig& cfg,
              const std::string& layout) {
    fs::create_directories(out_dir);
    for (int64_t i = 0; i < cfg.num_clips; ++i) {
        VideoClip clip = synth_clip(cfg, i);
        char name[32];
        std::snprintf(name, sizeof(name), "clip_%04lld", (long long)i);
        if (layout == "rawvid")
            write_clip(clip, out_dir / (std::string(name) + ".rvid"),
                       ClipLayout::rawvid);
        else
            write_clip(clip, out_dir / name, ClipLayout::frame_dir);
    }
    std::cout << "wrote " << cfg.num_clips << " clips to " << out_dir
              << std::endl;
    return 0;
}

int cmd_encode(const fs::path& in, const fs::path& out, const fs::path& ckpt,
               int k_flag, bool f16) {
    const std::string kind = checkpoint_kind(ckpt);
    VideoClip clip = load_clip(in, detect_layout(in));
    LatentFile lf;
    int k = 0;
    if (kind == "regen") {
        auto model = load_regen(ckpt);
        k = model->cfg.k;
        if (k_flag > 0 && k_flag != k)
            throw KMismatchError("--k " + std::to_string(k_flag) +
                                 " does not match checkpoint k=" +
                                 std::to_string(k));
        for (auto& lat : encode_video(*model, clip))
            lf.chunks.push_back(std::move(lat));
    } else if (kind == "baseline") {
        auto model = load_baseline(ckpt);
        k = model->cfg.k;
        if (k_flag > 0 && k_flag != k)
            throw KMismatchError("--k does not match checkpoint");
        for (auto& lat : encode_video(*model, clip))
            lf.chunks.push_back(std::move(lat));
    } else {
        throw CheckpointError("encode: unsupported checkpoint kind " + kind);
    }
    lf.k = k;
    lf.f16 = f16;
    lf.orig_t = clip.t();
    lf.orig_h = clip.h();
    lf.orig_w = clip.w();
    write_latent_file(lf, out);
    const double r = compression_factor(3, 8, k, kLatentChannels, 2);
    std::cout << "encoded " << clip.t() << " frames into "
              << lf.chunks.size() << " chunks (k=" << k
              << ", compression factor r=" << r << ")" << std::endl;
    return 0;
}

int cmd_decode(const fs::path& in, const fs::path& out, const fs::path& ckpt,
               int steps, const std::string& smooth, uint64_t seed,
               double scale) {
    const LatentFile lf = read_latent_file(in);
    const std::string kind = checkpoint_kind(ckpt);
    VideoClip decoded;
    if (kind == "regen") {
        auto model = load_regen(ckpt);
        if (model->cfg.k != lf.k)
            throw KMismatchError("checkpoint k=" +
                                 std::to_string(model->cfg.k) +
                                 " but latent file k=" + std::to_string(lf.k));
        DecodeOptions opt;
        opt.n_steps = steps;
        opt.seed = seed;
        if (scale != 1.0) {
            opt.out_h = (int64_t)std::llround((double)lf.h() * 8 * scale);
            opt.out_w = (int64_t)std::llround((double)lf.w() * 8 * scale);
            opt.out_h -= opt.out_h % 8;
            opt.out_w -= opt.out_w % 8;
        }
        decoded = decode_video(*model, lf.chunks,
                               smooth == "extend" ? SmoothMode::extend
                                                  : SmoothMode::none,
                               opt);
    } else if (kind == "baseline") {
        if (smooth == "extend")
            throw Error("baseline decode has no latent-extension mode");
        auto model = load_baseline(ckpt);
        if (model->cfg.k != lf.k) throw KMismatchError("k mismatch");
        std::vector<VideoClip> parts;
        for (const auto& lat : lf.chunks) {
            VideoClip rec;
            rec.frames = model->decode_values(lat);
            for (int64_t i = 0; i < rec.frames.numel(); ++i)
                rec.frames[i] = std::clamp(rec.frames[i], -1.f, 1.f);
            parts.push_back(std::move(rec));
        }
        decoded = concat_clips(parts);
    } else {
        throw CheckpointError("decode: unsupported checkpoint kind " + kind);
    }
    write_clip(decoded, out, detect_layout(out));
    std::cout << "decoded " << decoded.t() << " frames at " << decoded.h()
              << "x" << decoded.w() << std::endl;
    return 0;
}

int run_training(const ParsedTrainFile& pf, const fs::path& resume) {
    fs::create_directories(pf.train.out_dir);
    const fs::path ckpt_path = fs::path(pf.train.out_dir) / "ckpt.rgck";
    const fs::path metrics_path = fs::path(pf.train.out_dir) / "metrics.jsonl";

    auto log_cb = [&](const StepMetrics& m) {
        append_metrics_jsonl(metrics_path, m);
        if (pf.train.log_every > 0 && m.iter % pf.train.log_every == 0)
            std::cout << "iter " << m.iter << " loss " << m.loss << " task "
                      << m.task << " grad " << m.grad_norm << std::endl;
    };

    auto drive = [&](auto& model, Trainer& tr) {
        try {
            tr.run([&](const StepMetrics& m) {
                log_cb(m);
                if (pf.train.save_every > 0 &&
                    (m.iter + 1) % pf.train.save_every == 0) {
                    TrainerSnapshot snap{tr.iter(), tr.adam_t(),
                                         tr.rng_state()};
                    save_checkpoint(ckpt_path, model, &snap);
                }
            });
        } catch (const NonFiniteLossError&) {
            // keep the last saved checkpoint untouched
            throw;
        }
        TrainerSnapshot snap{tr.iter(), tr.adam_t(), tr.rng_state()};
        save_checkpoint(ckpt_path, model, &snap);
        std::cout << "checkpoint: " << ckpt_path << std::endl;
    };

    TrainConfig tc = pf.train;
    if (pf.kind == "regen") {
        std::unique_ptr<RegenModel<float>> model;
        TrainerSnapshot snap;
        bool resumed = false;
        if (!resume.empty()) {
            model = load_regen(resume, &snap);
            resumed = snap.iter > 0;
        } else {
            RegenConfig mc = regen_config_from_json(pf.model);
            tc.k = mc.k;
            model = std::make_unique<RegenModel<float>>(mc);
        }
        tc.k = model->cfg.k;
        RegenModel<float>& m = *model;
        Trainer tr(m.params(), tc,
                   [&m, &tc](Graph& g, const VideoClip& src, bool is_image,
                             Task task, int param, Rng& rng) {
                       if (is_image)
                           return m.diffusion_loss(g, src.frames, src.frames,
                                                   {0.0}, rng);
                       auto [input, spec] = make_target(src, task, param,
                                                        m.cfg.k,
                                                        tc.interp_factor);
                       return m.diffusion_loss(g, input.frames,
                                               spec.x_target.frames,
                                               spec.coords, rng);
                   });
        if (resumed) tr.restore(snap.iter, snap.rng_state, snap.adam_t);
        drive(m, tr);
    } else if (pf.kind == "baseline") {
        BaselineConfig mc = baseline_config_from_json(pf.model);
        tc.k = mc.k;
        tc.image_fraction = 0.0;  // conv decoder consumes both latent frames
        tc.tasks.final_probs = {1, 0, 0};
        auto model = std::make_unique<BaselineModel<float>>(mc);
        BaselineModel<float>& m = *model;
        Trainer tr(m.params(), tc,
                   [&m, &tc](Graph& g, const VideoClip& src, bool, Task, int,
                             Rng&) {
                       auto [input, spec] = make_target(
                           src, Task::recon, 0, m.cfg.k, tc.interp_factor);
                       return m.recon_loss(g, input.frames);
                   });
        drive(m, tr);
    } else {
        InContextConfig mc = incontext_config_from_json(pf.model);
        mc.train_frames = mc.k + 1;
        mc.train_gh = (int)(pf.train.data.h / 8);
        mc.train_gw = (int)(pf.train.data.w / 8);
        tc.k = mc.k;
        tc.image_fraction = 0.0;
        tc.tasks.final_probs = {1, 0, 0};  // fixed PE: recon grid only
        auto model = std::make_unique<InContextModel<float>>(mc);
        InContextModel<float>& m = *model;
        Trainer tr(m.params(), tc,
                   [&m, &tc](Graph& g, const VideoClip& src, bool, Task, int,
                             Rng& rng) {
                       auto [input, spec] = make_target(
                           src, Task::recon, 0, m.cfg.k, tc.interp_factor);
                       return m.diffusion_loss(g, input.frames, rng);
                   });
        drive(m, tr);
    }
    return 0;
}

int cmd_eval(const fs::path& ckpt, const fs::path& data, int steps,
             const fs::path& report, const fs::path& csv,
             const std::string& smooth, uint64_t seed) {
    auto dataset = load_dataset(data);
    const std::string kind = checkpoint_kind(ckpt);
    EvalConfig cfg;
    cfg.n_steps = steps;
    cfg.seed = seed;
    cfg.smooth = smooth == "extend" ? SmoothMode::extend : SmoothMode::none;
    cfg.method = kind;
    EvalReport rep;
    if (kind == "regen") {
        auto model = load_regen(ckpt);
        cfg.k = model->cfg.k;
        cfg.compression = compression_factor(3, 8, cfg.k, kLatentChannels, 2);
        rep = eval_recon(regen_pipeline(*model, steps, cfg.smooth, seed),
                         dataset, cfg);
    } else if (kind == "baseline") {
        auto model = load_baseline(ckpt);
        cfg.k = model->cfg.k;
        cfg.compression = compression_factor(3, 8, cfg.k, kLatentChannels, 2);
        rep = eval_recon(baseline_pipeline(*model), dataset, cfg);
    } else {
        auto model = load_incontext(ckpt);
        cfg.k = model->cfg.k;
        cfg.compression = compression_factor(3, 8, cfg.k, kLatentChannels, 2);
        rep = eval_recon(incontext_pipeline(*model, steps, seed), dataset, cfg);
    }
    if (!report.empty()) {
        std::ofstream out(report);
        if (!out) throw IoError("cannot write report: " + report.string());
        out << rep.to_json().dump(2) << "\n";
    }
    if (!csv.empty()) {
        std::ofstream out(csv);
        out << rep.to_csv();
    }
    std::cout << "method=" << cfg.method << " psnr=" << rep.mean_psnr
              << " ssim=" << rep.mean_ssim << " boundary_d=" << rep.mean_d
              << std::endl;
    return 0;
}

int cmd_retarget(const fs::path& ckpt, const fs::path& in,
                 const std::string& mode, int shift, const fs::path& out,
                 int steps, uint64_t seed) {
    const LatentFile lf = read_latent_file(in);
    auto model = load_regen(ckpt);
    if (model->cfg.k != lf.k) throw KMismatchError("k mismatch");
    if (mode == "extrap" && std::abs(shift) > model->cfg.k)
        throw ShiftError("|shift| exceeds k=" + std::to_string(model->cfg.k));
    DecodeOptions opt;
    opt.n_steps = steps;
    opt.seed = seed;
    std::vector<VideoClip> parts;
    for (const auto& lat : lf.chunks)
        parts.push_back(retarget_chunk(*model, lat,
                                       mode == "interp2x"
                                           ? RetargetMode::interp2x
                                           : RetargetMode::extrap,
                                       shift, opt));
    VideoClip full = concat_clips(parts);
    write_clip(full, out, detect_layout(out));
    std::cout << "retargeted " << lf.chunks.size() << " chunks to "
              << full.t() << " frames" << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_determinism_env();
    CLI::App app{"REGEN encoder-generator video codec"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate moving-shapes clips");
    SynthConfig scfg;
    std::string s_out, s_layout = "rawvid";
    synth->add_option("--out", s_out)->required();
    synth->add_option("--seed", scfg.seed);
    synth->add_option("--clips", scfg.num_clips);
    synth->add_option("--shapes", scfg.shapes_per_clip);
    synth->add_option("--height", scfg.h);
    synth->add_option("--width", scfg.w);
    synth->add_option("--frames", scfg.t);
    synth->add_option("--velocity", scfg.velocity_range);
    synth->add_option("--layout", s_layout)
        ->check(CLI::IsMember({"rawvid", "frame_dir"}));

    // encode
    auto* enc = app.add_subcommand("encode", "video -> latent file");
    std::string e_in, e_out, e_ckpt;
    int e_k = 0;
    bool e_f16 = false;
    enc->add_option("--in", e_in)->required();
    enc->add_option("--out", e_out)->required();
    enc->add_option("--ckpt", e_ckpt)->required();
    enc->add_option("--k", e_k);
    enc->add_flag("--f16", e_f16);

    // decode
    auto* dec = app.add_subcommand("decode", "latent file -> video");
    std::string d_in, d_out, d_ckpt, d_smooth = "none";
    int d_steps = 8;
    uint64_t d_seed = 0;
    double d_scale = 1.0;
    dec->add_option("--in", d_in)->required();
    dec->add_option("--out", d_out)->required();
    dec->add_option("--ckpt", d_ckpt)->required();
    dec->add_option("--steps", d_steps);
    dec->add_option("--smooth", d_smooth)
        ->check(CLI::IsMember({"none", "extend"}));
    dec->add_option("--seed", d_seed);
    dec->add_option("--scale", d_scale,
                    "experimental: decode onto a scaled token grid");

    // train / train-baseline
    auto* tr = app.add_subcommand("train", "train the REGEN model");
    std::string t_config, t_resume;
    tr->add_option("--config", t_config)->required();
    tr->add_option("--resume", t_resume);
    auto* trb =
        app.add_subcommand("train-baseline", "train a comparison model");
    std::string tb_config;
    trb->add_option("--config", tb_config)->required();

    // eval
    auto* ev = app.add_subcommand("eval", "reconstruction evaluation report");
    std::string v_ckpt, v_data, v_report, v_csv, v_smooth = "none";
    int v_steps = 8;
    uint64_t v_seed = 0;
    ev->add_option("--ckpt", v_ckpt)->required();
    ev->add_option("--data", v_data)->required();
    ev->add_option("--steps", v_steps);
    ev->add_option("--report", v_report);
    ev->add_option("--csv", v_csv);
    ev->add_option("--smooth", v_smooth)
        ->check(CLI::IsMember({"none", "extend"}));
    ev->add_option("--seed", v_seed);

    // retarget
    auto* rt = app.add_subcommand("retarget", "interpolate or extrapolate");
    std::string r_ckpt, r_in, r_out, r_mode = "interp2x";
    int r_shift = 1, r_steps = 8;
    uint64_t r_seed = 0;
    rt->add_option("--ckpt", r_ckpt)->required();
    rt->add_option("--in", r_in)->required();
    rt->add_option("--out", r_out)->required();
    rt->add_option("--mode", r_mode)
        ->check(CLI::IsMember({"interp2x", "extrap"}));
    rt->add_option("--shift", r_shift);
    rt->add_option("--steps", r_steps);
    rt->add_option("--seed", r_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(s_out, scfg, s_layout);
        if (enc->parsed()) return cmd_encode(e_in, e_out, e_ckpt, e_k, e_f16);
        if (dec->parsed())
            return cmd_decode(d_in, d_out, d_ckpt, d_steps, d_smooth, d_seed,
                              d_scale);
        if (tr->parsed())
            return run_training(parse_train_config(t_config), t_resume);
        if (trb->parsed()) {
            auto pf = parse_train_config(tb_config);
            if (pf.kind == "regen")
                throw ConfigError("kind",
                                  "train-baseline expects baseline|incontext");
            return run_training(pf, "");
        }
        if (ev->parsed())
            return cmd_eval(v_ckpt, v_data, v_steps, v_report, v_csv, v_smooth,
                            v_seed);
        if (rt->parsed())
            return cmd_retarget(r_ckpt, r_in, r_mode, r_shift, r_out, r_steps,
                                r_seed);
    } catch (const ConfigError& e) {
        diag("config", e.what(), {{"key", e.key}});
        return 1;
    } catch (const ChunkError& e) {
        diag("chunking", e.what(), {{"pad_to", e.pad_to}});
        return 2;
    } catch (const CheckpointError& e) {
        diag("checkpoint", e.what());
        return 3;
    } catch (const KMismatchError& e) {
        diag("k_mismatch", e.what());
        return 4;
    } catch (const TokenBudgetError& e) {
        diag("token_budget", e.what());
        return 5;
    } catch (const NonFiniteLossError& e) {
        diag("non_finite_loss", e.what());
        return 6;
    } catch (const ShiftError& e) {
        diag("shift", e.what());
        return 7;
    } catch (const std::exception& e) {
        diag("error", e.what());
        return 10;
    }
    return 0;
}
