#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "regen/core/tensor.hpp"

namespace regen {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Sequential xoshiro256** generator with an explicit, serializable state.
// Self-contained so that streams are reproducible across platforms and
// standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t x = seed;
        for (int i = 0; i < 4; ++i) {
            x = splitmix64(x);
            s_[i] = x;
        }
        has_cached_ = false;
        cached_ = 0;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    int64_t uniform_int(int64_t n) {
        return (int64_t)(uniform() * (double)n) % n;
    }

    // Standard normal via Box-Muller (cached pair).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    template <class S>
    void fill_normal(TensorT<S>& t) {
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = (S)normal();
    }

    template <class S>
    void fill_uniform(TensorT<S>& t, double lo, double hi) {
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = (S)uniform(lo, hi);
    }

    // State round-trips bit-exactly (checkpoint resume).
    std::vector<uint64_t> save_state() const {
        std::vector<uint64_t> v(s_, s_ + 4);
        v.push_back(has_cached_ ? 1u : 0u);
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(cached_));
        std::memcpy(&bits, &cached_, sizeof(bits));
        v.push_back(bits);
        return v;
    }

    void load_state(const std::vector<uint64_t>& v) {
        for (int i = 0; i < 4; ++i) s_[i] = v[(size_t)i];
        has_cached_ = v[4] != 0;
        std::memcpy(&cached_, &v[5], sizeof(cached_));
    }

private:
    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t s_[4] = {};
    bool has_cached_ = false;
    double cached_ = 0;
};

// Stateless counter-based gaussian stream: value i of stream (seed, key) is
// a pure function of (seed, key, i). Order-free, safe to fill in parallel,
// and stable across runs; used for sampler init noise so that the same
// output frame coordinate always receives the same noise for a given seed.
inline double keyed_normal_pair(uint64_t seed, int64_t key, int64_t pair,
                                double* second) {
    const uint64_t base =
        splitmix64(splitmix64(splitmix64(seed) ^ (uint64_t)key) ^
                   (uint64_t)pair);
    const uint64_t b2 = splitmix64(base ^ 0xd1b54a32d192ed03ull);
    const double u1 = ((double)(base >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = (double)(b2 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    if (second) *second = r * std::sin(a);
    return r * std::cos(a);
}

template <class S>
void fill_normal_keyed(TensorT<S>& t, uint64_t seed, int64_t key) {
    const int64_t n = t.numel();
    S* p = t.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < (n + 1) / 2; ++i) {
        double z1 = 0;
        const double z0 = keyed_normal_pair(seed, key, i, &z1);
        p[2 * i] = (S)z0;
        if (2 * i + 1 < n) p[2 * i + 1] = (S)z1;
    }
}

}  // namespace regen
