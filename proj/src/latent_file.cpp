#include "regen/codec/latent_file.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace regen {

uint16_t float_to_half(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    const uint32_t sign = (bits >> 16) & 0x8000u;
    const int32_t exp = (int32_t)((bits >> 23) & 0xff) - 127 + 15;
    uint32_t mant = bits & 0x7fffffu;
    if (exp >= 31) return (uint16_t)(sign | 0x7c00u);  // inf/overflow
    if (exp <= 0) {
        // subnormal or zero
        if (exp < -10) return (uint16_t)sign;
        mant |= 0x800000u;
        const int shift = 14 - exp;
        uint32_t half_mant = mant >> shift;
        // round to nearest even
        const uint32_t rem = mant & ((1u << shift) - 1);
        const uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half_mant & 1))) ++half_mant;
        return (uint16_t)(sign | half_mant);
    }
    uint32_t half = sign | ((uint32_t)exp << 10) | (mant >> 13);
    const uint32_t rem = mant & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1))) ++half;
    return (uint16_t)half;
}

float half_to_float(uint16_t h) {
    const uint32_t sign = (uint32_t)(h & 0x8000u) << 16;
    const uint32_t exp = (h >> 10) & 0x1f;
    const uint32_t mant = h & 0x3ffu;
    uint32_t bits;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // subnormal
            int e = -1;
            uint32_t m = mant;
            while (!(m & 0x400u)) {
                m <<= 1;
                --e;
            }
            bits = sign | ((uint32_t)(127 - 15 + e + 1) << 23) |
                   ((m & 0x3ffu) << 13);
        }
    } else if (exp == 31) {
        bits = sign | 0x7f800000u | (mant << 13);
    } else {
        bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    float out;
    std::memcpy(&out, &bits, 4);
    return out;
}

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

template <class T>
void put(FILE* f, T v) {
    if (std::fwrite(&v, sizeof(T), 1, f) != 1)
        throw IoError("latent file: short write");
}

template <class T>
T get(FILE* f) {
    T v;
    if (std::fread(&v, sizeof(T), 1, f) != 1)
        throw FormatError("latent file: truncated header");
    return v;
}

void write_map(FILE* f, const Tensor& t, bool f16) {
    const int64_t n = t.numel();
    if (f16) {
        std::vector<uint16_t> buf((size_t)n);
        for (int64_t i = 0; i < n; ++i) buf[(size_t)i] = float_to_half(t[i]);
        if (std::fwrite(buf.data(), 2, (size_t)n, f) != (size_t)n)
            throw IoError("latent file: short write");
    } else {
        if (std::fwrite(t.data(), 4, (size_t)n, f) != (size_t)n)
            throw IoError("latent file: short write");
    }
}

Tensor read_map(FILE* f, int64_t h, int64_t w, int64_t c, bool f16) {
    Tensor t({h, w, c});
    const int64_t n = t.numel();
    if (f16) {
        std::vector<uint16_t> buf((size_t)n);
        if (std::fread(buf.data(), 2, (size_t)n, f) != (size_t)n)
            throw FormatError("latent file: truncated payload");
        for (int64_t i = 0; i < n; ++i) t[i] = half_to_float(buf[(size_t)i]);
    } else {
        if (std::fread(t.data(), 4, (size_t)n, f) != (size_t)n)
            throw FormatError("latent file: truncated payload");
    }
    return t;
}

}  // namespace

void write_latent_file(const LatentFile& lf,
                       const std::filesystem::path& path) {
    if (lf.chunks.empty()) throw ShapeError("latent file: no chunks");
    for (const auto& c : lf.chunks) {
        if (!c.z_m) throw ShapeError("latent file: chunk missing z_m");
        if (c.z_c.shape != lf.chunks[0].z_c.shape || c.channels() != lf.c_lat)
            throw ShapeError("latent file: inconsistent chunk shapes");
    }
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw IoError("latent file: cannot open for write " + path.string());
    if (std::fwrite("RGLT", 1, 4, f.get()) != 4)
        throw IoError("latent file: short write");
    put<uint16_t>(f.get(), 1);
    put<uint16_t>(f.get(), (uint16_t)lf.k);
    put<uint16_t>(f.get(), (uint16_t)lf.m);
    put<uint16_t>(f.get(), (uint16_t)lf.c_lat);
    put<uint8_t>(f.get(), lf.f16 ? 1 : 0);
    put<uint32_t>(f.get(), (uint32_t)lf.chunks.size());
    put<uint32_t>(f.get(), (uint32_t)lf.h());
    put<uint32_t>(f.get(), (uint32_t)lf.w());
    put<uint32_t>(f.get(), (uint32_t)lf.orig_t);
    put<uint32_t>(f.get(), (uint32_t)lf.orig_h);
    put<uint32_t>(f.get(), (uint32_t)lf.orig_w);
    for (const auto& c : lf.chunks) {
        write_map(f.get(), c.z_c, lf.f16);
        write_map(f.get(), *c.z_m, lf.f16);
    }
}

LatentFile read_latent_file(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw IoError("latent file: cannot open " + path.string());
    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 ||
        std::memcmp(magic, "RGLT", 4) != 0)
        throw FormatError("latent file: bad magic in " + path.string());
    if (get<uint16_t>(f.get()) != 1)
        throw FormatError("latent file: unsupported version");
    LatentFile lf;
    lf.k = get<uint16_t>(f.get());
    lf.m = get<uint16_t>(f.get());
    lf.c_lat = get<uint16_t>(f.get());
    const uint8_t dtype = get<uint8_t>(f.get());
    if (dtype > 1) throw FormatError("latent file: unknown dtype");
    lf.f16 = dtype == 1;
    const uint32_t n_chunks = get<uint32_t>(f.get());
    const uint32_t h = get<uint32_t>(f.get());
    const uint32_t w = get<uint32_t>(f.get());
    lf.orig_t = get<uint32_t>(f.get());
    lf.orig_h = get<uint32_t>(f.get());
    lf.orig_w = get<uint32_t>(f.get());
    if (n_chunks == 0) throw FormatError("latent file: zero chunks");

    // payload size must match the header exactly
    const int64_t expect = (int64_t)n_chunks * 2 * h * w * lf.c_lat *
                           (lf.f16 ? 2 : 4);
    const auto pos = std::ftell(f.get());
    std::fseek(f.get(), 0, SEEK_END);
    const auto end = std::ftell(f.get());
    if (end - pos != expect)
        throw FormatError("latent file: payload size mismatch");
    std::fseek(f.get(), pos, SEEK_SET);

    for (uint32_t i = 0; i < n_chunks; ++i) {
        LatentChunk c;
        c.z_c = read_map(f.get(), h, w, lf.c_lat, lf.f16);
        c.z_m = read_map(f.get(), h, w, lf.c_lat, lf.f16);
        lf.chunks.push_back(std::move(c));
    }
    return lf;
}

}  // namespace regen
