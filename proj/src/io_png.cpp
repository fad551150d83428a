#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "json.hpp"
#include "regen/video/io.hpp"

namespace regen {

namespace {

void write_png_rgb8(const std::filesystem::path& path, const uint8_t* rgb,
                    int64_t h, int64_t w) {
    FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("png: cannot open for write: " + path.string());
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(f);
        throw IoError("png: write failed: " + path.string());
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, (png_uint_32)w, (png_uint_32)h, 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows((size_t)h);
    for (int64_t y = 0; y < h; ++y)
        rows[(size_t)y] = const_cast<png_bytep>(rgb + y * w * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

void read_png_rgb8(const std::filesystem::path& path, std::vector<uint8_t>& rgb,
                   int64_t& h, int64_t& w) {
    FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) throw IoError("png: cannot open: " + path.string());
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(f);
        throw FormatError("png: corrupt file: " + path.string());
    }
    png_init_io(png, f);
    png_read_info(png, info);
    // normalize anything to 8-bit RGB
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    h = (int64_t)png_get_image_height(png, info);
    w = (int64_t)png_get_image_width(png, info);
    rgb.resize((size_t)(h * w * 3));
    std::vector<png_bytep> rows((size_t)h);
    for (int64_t y = 0; y < h; ++y) rows[(size_t)y] = rgb.data() + y * w * 3;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
}

std::string frame_name(int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06lld.png", (long long)i);
    return buf;
}

}  // namespace

void write_frame_dir(const VideoClip& clip, const std::filesystem::path& dir) {
    validate_clip(clip, /*require_div8=*/false);
    std::filesystem::create_directories(dir);
    const int64_t H = clip.h(), W = clip.w();
    std::vector<uint8_t> rgb((size_t)(H * W * 3));
    for (int64_t t = 0; t < clip.t(); ++t) {
        const float* src = clip.frames.data() + t * H * W * 3;
        for (int64_t i = 0; i < H * W * 3; ++i) {
            const double v = ((double)src[i] + 1.0) * 0.5 * 255.0;
            rgb[(size_t)i] = (uint8_t)std::clamp((int)std::lround(v), 0, 255);
        }
        write_png_rgb8(dir / frame_name(t), rgb.data(), H, W);
    }
    nlohmann::ordered_json meta;
    meta["frame_rate"] = clip.frame_rate;
    meta["count"] = clip.t();
    meta["height"] = H;
    meta["width"] = W;
    std::ofstream out(dir / "meta.json");
    if (!out) throw IoError("frame_dir: cannot write meta.json");
    out << meta.dump(2) << "\n";
}

VideoClip read_frame_dir(const std::filesystem::path& dir) {
    const auto meta_path = dir / "meta.json";
    if (!std::filesystem::exists(meta_path))
        throw IoError("frame_dir: missing meta.json in " + dir.string());
    nlohmann::json meta;
    {
        std::ifstream in(meta_path);
        try {
            in >> meta;
        } catch (const std::exception& e) {
            throw FormatError("frame_dir: bad meta.json: " +
                              std::string(e.what()));
        }
    }
    const int64_t count = meta.at("count").get<int64_t>();
    const int64_t H = meta.at("height").get<int64_t>();
    const int64_t W = meta.at("width").get<int64_t>();
    if (count < 1) throw FormatError("frame_dir: count must be >= 1");

    VideoClip clip;
    clip.frames = Tensor({count, H, W, 3});
    clip.frame_rate = meta.value("frame_rate", 24.0);
    clip.source_id = dir.filename().string();
    std::vector<uint8_t> rgb;
    for (int64_t t = 0; t < count; ++t) {
        int64_t fh = 0, fw = 0;
        read_png_rgb8(dir / frame_name(t), rgb, fh, fw);
        if (fh != H || fw != W)
            throw FormatError("frame_dir: frame " + std::to_string(t) +
                              " has inconsistent dimensions");
        float* dst = clip.frames.data() + t * H * W * 3;
        for (int64_t i = 0; i < H * W * 3; ++i)
            dst[i] = (float)((double)rgb[(size_t)i] / 255.0 * 2.0 - 1.0);
    }
    return clip;
}

}  // namespace regen
