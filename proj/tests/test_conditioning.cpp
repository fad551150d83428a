#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <numeric>

#include "doctest.h"
#include "model_test_util.hpp"

using namespace regen;
using namespace regen::testutil;

namespace {

Tensor random_latent(uint64_t seed, int64_t h, int64_t w) {
    Tensor t({h, w, 8});
    Rng rng(seed);
    rng.fill_normal(t);
    return t;
}

Tensor expand_f(Conditioning<float>& cond, const Tensor& z_c,
                const Tensor* z_m, const std::vector<double>& coords) {
    Graph g(false);
    Var zc = g.leaf(z_c, false);
    Var zm{};
    if (z_m) zm = g.leaf(*z_m, false);
    return g.val(cond.expand(g, zc, zm, coords));
}

}  // namespace

TEST_CASE("expand shape contract and determinism") {
    SirenConfig sc;
    sc.depth = 3;
    sc.hidden_dim = 16;
    Conditioning<float> cond(sc, 24);
    Rng rng(1);
    cond.init(rng);
    auto z_c = random_latent(2, 8, 8);
    auto z_m = random_latent(3, 8, 8);
    std::vector<double> coords = {0, 0.25, 0.5, 0.75, 1.0};
    auto z_e = expand_f(cond, z_c, &z_m, coords);
    CHECK(z_e.shape == Shape{5, 8, 8, 24});
    auto again = expand_f(cond, z_c, &z_m, coords);
    CHECK(max_abs_diff(z_e, again) == 0.0);
    CHECK_THROWS_AS(expand_f(cond, z_c, &z_m, {}), ShapeError);
}

TEST_CASE("expand is pointwise in (x, y): permutation equivariance") {
    SirenConfig sc;
    sc.depth = 2;
    sc.hidden_dim = 8;
    Conditioning<float> cond(sc, 12);
    Rng rng(4);
    cond.init(rng);
    // give film maps generic weights so z_m matters
    rng.fill_normal(cond.film[0].w.value);
    rng.fill_normal(cond.film[1].w.value);

    const int64_t h = 2, w = 3, P = h * w;
    auto z_c = random_latent(5, h, w);
    auto z_m = random_latent(6, h, w);
    std::vector<double> coords = {0.0, 0.5};
    auto z_e = expand_f(cond, z_c, &z_m, coords);

    // permute positions
    std::vector<int64_t> perm(P);
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[0], perm[4]);
    std::swap(perm[2], perm[3]);
    Tensor pc({h, w, 8}), pm({h, w, 8});
    for (int64_t p = 0; p < P; ++p)
        for (int64_t c = 0; c < 8; ++c) {
            pc[p * 8 + c] = z_c[perm[(size_t)p] * 8 + c];
            pm[p * 8 + c] = z_m[perm[(size_t)p] * 8 + c];
        }
    auto z_e_perm = expand_f(cond, pc, &pm, coords);
    const int64_t d = 12;
    for (int64_t t = 0; t < 2; ++t)
        for (int64_t p = 0; p < P; ++p)
            for (int64_t c = 0; c < d; ++c)
                CHECK(z_e_perm[(t * P + p) * d + c] ==
                      z_e[(t * P + perm[(size_t)p]) * d + c]);
}

TEST_CASE("FiLM at identity: zero-init modulation ignores z_m") {
    SirenConfig sc;
    sc.depth = 2;
    sc.hidden_dim = 8;
    Conditioning<float> cond(sc, 12);
    Rng rng(7);
    cond.init(rng);  // film maps zero-initialized
    auto z_c = random_latent(8, 4, 4);
    auto zm1 = random_latent(9, 4, 4);
    auto zm2 = random_latent(10, 4, 4);
    // frame-0 replacement reads the (identical) time features; outputs match
    auto a = expand_f(cond, z_c, &zm1, {0.0, 1.0});
    auto b = expand_f(cond, z_c, &zm2, {0.0, 1.0});
    CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("modulated SIREN responds to z_m") {
    SirenConfig sc;
    sc.depth = 2;
    sc.hidden_dim = 8;
    Conditioning<float> cond(sc, 12);
    Rng rng(11);
    cond.init(rng);
    for (auto& f : cond.film) rng.fill_normal(f.w.value);
    Graph g(false);
    Tensor v1({1, 8}), v2({1, 8});
    rng.fill_normal(v1);
    rng.fill_normal(v2);
    Var a = cond.siren_time_feature(g, 0.5, g.leaf(v1, false));
    Var b = cond.siren_time_feature(g, 0.5, g.leaf(v2, false));
    CHECK(g.val(a).shape == Shape{1, 8});
    CHECK(max_abs_diff(g.val(a), g.val(b)) > 1e-6);
}

TEST_CASE("tiny SIREN closed form at t=0") {
    SirenConfig sc;
    sc.depth = 2;
    sc.hidden_dim = 4;
    sc.omega0 = 30.0;
    Conditioning<float> cond(sc, 8);
    // hand-set weights; film stays zero (identity)
    for (int i = 0; i < 4; ++i) {
        cond.siren[0].w.value[i] = 0.01f * (float)(i + 1);   // [4,1]
        cond.siren[0].b.value[i] = 0.02f * (float)(i + 1);
    }
    cond.film[0].zero_init();
    cond.film[1].zero_init();
    for (int i = 0; i < 16; ++i)
        cond.siren[1].w.value[i] = 0.005f * (float)(i % 5);
    for (int i = 0; i < 4; ++i) cond.siren[1].b.value[i] = 0.01f;

    Graph g(false);
    Tensor zm = Tensor::zeros({1, 8});
    Var out = cond.siren_time_feature(g, 0.0, g.leaf(zm, false));

    // independent evaluation of sin(w0*(W1*sin(w0*(W0*0 + b0)) + b1))
    double h0[4];
    for (int i = 0; i < 4; ++i)
        h0[i] = std::sin(30.0 * (double)cond.siren[0].b.value[i]);
    for (int i = 0; i < 4; ++i) {
        double acc = (double)cond.siren[1].b.value[i];
        for (int j = 0; j < 4; ++j)
            acc += (double)cond.siren[1].w.value[i * 4 + j] * h0[j];
        const double expect = std::sin(30.0 * acc);
        CHECK(std::abs((double)g.val(out)[i] - expect) < 1e-5);
    }
}

TEST_CASE("null motion vector: zero-init, length 8, used for images") {
    SirenConfig sc;
    sc.depth = 2;
    sc.hidden_dim = 8;
    Conditioning<float> cond(sc, 12);
    Rng rng(12);
    cond.init(rng);
    CHECK(cond.null_motion.value.shape == Shape{1, 8});
    for (int64_t i = 0; i < 8; ++i) CHECK(cond.null_motion.value[i] == 0.f);

    // image path: expand without z_m equals expand with z_m = null vector
    for (auto& f : cond.film) rng.fill_normal(f.w.value);
    auto z_c = random_latent(13, 4, 4);
    auto img = expand_f(cond, z_c, nullptr, {0.0});
    Tensor zeros_m = Tensor::zeros({4, 4, 8});
    cond.replace_frame0 = false;  // image path never replaces frame 0
    auto vid = expand_f(cond, z_c, &zeros_m, {0.0});
    CHECK(max_abs_diff(img, vid) == 0.0);
}

TEST_CASE("resolution generalization and continuity in t_f") {
    SirenConfig sc;
    sc.depth = 3;
    sc.hidden_dim = 16;
    Conditioning<float> cond(sc, 16);
    Rng rng(14);
    cond.init(rng);
    for (auto& f : cond.film) rng.fill_normal(f.w.value);

    auto z_c = random_latent(15, 5, 7);  // unseen, non-square grid
    auto z_m = random_latent(16, 5, 7);
    auto z_e = expand_f(cond, z_c, &z_m, {-0.25, 0.0, 0.33, 1.25});
    CHECK(z_e.shape == Shape{4, 5, 7, 16});

    // bounded finite-difference slope along t_f (no discontinuities)
    const double delta = 1e-4;
    for (double t : {-0.2, 0.1, 0.77, 1.1}) {
        auto a = expand_f(cond, z_c, &z_m, {t});
        auto b = expand_f(cond, z_c, &z_m, {t + delta});
        const double slope = max_abs_diff(a, b) / delta;
        CHECK(slope < 1e5);
    }
}
