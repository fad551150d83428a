#include "regen/eval/eval.hpp"

#include <sstream>

#include "regen/model/embedder.hpp"

namespace regen {

EvalReport eval_recon(const ReconFn& pipeline,
                      const std::vector<VideoClip>& dataset,
                      const EvalConfig& cfg) {
    if (dataset.empty()) throw ShapeError("eval: empty dataset");
    EvalReport rep;
    rep.cfg = cfg;
    rep.res_h = dataset[0].h();
    rep.res_w = dataset[0].w();
    for (const VideoClip& gt : dataset) {
        if (gt.t() < cfg.k + 1)
            throw ChunkError("eval: clip shorter than one chunk", cfg.k + 1);
        if (gt.t() % (cfg.k + 1) != 0)
            throw ChunkError("eval: clip length not a chunk multiple",
                             ((gt.t() / (cfg.k + 1)) + 1) * (cfg.k + 1));
        VideoClip rec = pipeline(gt);
        if (rec.frames.shape != gt.frames.shape)
            throw ShapeError("eval: pipeline changed clip shape");
        EvalRow row;
        row.id = gt.source_id;
        row.psnr = psnr(gt, rec);
        row.ssim = ssim(gt, rec);
        row.d_boundary = boundary_discontinuity(rec, cfg.k);
        rep.rows.push_back(std::move(row));
    }
    for (const auto& r : rep.rows) {
        rep.mean_psnr += r.psnr;
        rep.mean_ssim += r.ssim;
        rep.mean_d += r.d_boundary;
    }
    const double n = (double)rep.rows.size();
    rep.mean_psnr /= n;
    rep.mean_ssim /= n;
    rep.mean_d /= n;
    return rep;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["method"] = cfg.method;
    j["k"] = cfg.k;
    j["m"] = 8;
    j["resolution"] = {res_h, res_w};
    j["n_steps"] = cfg.n_steps;
    j["seed"] = cfg.seed;
    j["smooth"] = cfg.smooth == SmoothMode::extend ? "extend" : "none";
    j["compression_factor"] = cfg.compression;
    j["ssim_window"] = 11;
    j["ssim_channels"] = "bt601-luma";
    j["rfvd"] = nullptr;  // reserved: external FVD values merge here
    j["aggregate"]["psnr"] = mean_psnr;
    j["aggregate"]["ssim"] = mean_ssim;
    j["aggregate"]["boundary_d"] = mean_d;
    auto& rows_j = j["videos"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json v;
        v["id"] = r.id;
        v["psnr"] = r.psnr;
        v["ssim"] = r.ssim;
        v["boundary_d"] = r.d_boundary;
        rows_j.push_back(std::move(v));
    }
    return j;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "method,compression,psnr,ssim\n";
    os << cfg.method << "," << cfg.compression << "," << mean_psnr << ","
       << mean_ssim << "\n";
    return os.str();
}

ReconFn regen_pipeline(RegenModel<float>& m, int n_steps, SmoothMode smooth,
                       uint64_t seed) {
    return [&m, n_steps, smooth, seed](const VideoClip& gt) {
        auto lats = encode_video(m, gt);
        DecodeOptions opt;
        opt.n_steps = n_steps;
        opt.seed = seed;
        return decode_video(m, lats, smooth, opt);
    };
}

ReconFn baseline_pipeline(BaselineModel<float>& m) {
    return [&m](const VideoClip& gt) {
        std::vector<VideoClip> parts;
        for (const VideoClip& c : chunk(gt, ChunkSpec{m.cfg.k})) {
            LatentChunk lat = encode_chunk(m, c);
            VideoClip rec;
            rec.frames = m.decode_values(lat);
            for (int64_t i = 0; i < rec.frames.numel(); ++i)
                rec.frames[i] = std::clamp(rec.frames[i], -1.f, 1.f);
            parts.push_back(std::move(rec));
        }
        return concat_clips(parts);
    };
}

ReconFn incontext_pipeline(InContextModel<float>& m, int n_steps,
                           uint64_t seed) {
    return [&m, n_steps, seed](const VideoClip& gt) {
        std::vector<VideoClip> parts;
        for (const VideoClip& c : chunk(gt, ChunkSpec{m.cfg.k})) {
            LatentChunk lat = encode_chunk(m, c);
            VideoClip rec;
            rec.frames = incontext_decode_chunk(m, lat, n_steps, seed);
            parts.push_back(std::move(rec));
        }
        return concat_clips(parts);
    };
}

}  // namespace regen
