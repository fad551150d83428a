#pragma once

// Evaluation harness producing Table-1-shaped reports: per-video PSNR/SSIM,
// chunk-boundary discontinuity, aggregates, and a config echo sufficient to
// reproduce every row.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "regen/diffusion/sampler.hpp"
#include "regen/eval/metrics.hpp"
#include "regen/model/baseline.hpp"

namespace regen {

struct EvalConfig {
    int k = 4;
    int n_steps = 8;
    uint64_t seed = 0;
    SmoothMode smooth = SmoothMode::none;
    std::string method = "regen";
    double compression = 0;
};

struct EvalRow {
    std::string id;
    double psnr = 0;
    double ssim = 0;
    double d_boundary = 0;
};

struct EvalReport {
    EvalConfig cfg;
    int64_t res_h = 0, res_w = 0;
    std::vector<EvalRow> rows;
    double mean_psnr = 0, mean_ssim = 0, mean_d = 0;

    nlohmann::ordered_json to_json() const;
    std::string to_csv() const;
};

// A reconstruction pipeline maps a ground-truth clip to its codec
// round-trip. Stubs (e.g. identity) slot in for tests.
using ReconFn = std::function<VideoClip(const VideoClip&)>;

EvalReport eval_recon(const ReconFn& pipeline,
                      const std::vector<VideoClip>& dataset,
                      const EvalConfig& cfg);

ReconFn regen_pipeline(RegenModel<float>& m, int n_steps, SmoothMode smooth,
                       uint64_t seed);
ReconFn baseline_pipeline(BaselineModel<float>& m);
ReconFn incontext_pipeline(InContextModel<float>& m, int n_steps,
                           uint64_t seed);

}  // namespace regen
