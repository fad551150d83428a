#include <cstdio>
#include <cstring>

#include "regen/video/io.hpp"

namespace regen {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

template <class T>
void write_pod(FILE* f, T v) {
    if (std::fwrite(&v, sizeof(T), 1, f) != 1)
        throw IoError("rawvid: short write");
}

template <class T>
T read_pod(FILE* f) {
    T v;
    if (std::fread(&v, sizeof(T), 1, f) != 1)
        throw IoError("rawvid: short read");
    return v;
}

}  // namespace

void write_rawvid(const VideoClip& clip, const std::filesystem::path& path) {
    validate_clip(clip, /*require_div8=*/false);
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw IoError("rawvid: cannot open for write: " + path.string());
    if (std::fwrite("RVID", 1, 4, f.get()) != 4)
        throw IoError("rawvid: short write");
    write_pod<uint16_t>(f.get(), 1);
    write_pod<uint32_t>(f.get(), (uint32_t)clip.t());
    write_pod<uint32_t>(f.get(), (uint32_t)clip.h());
    write_pod<uint32_t>(f.get(), (uint32_t)clip.w());
    write_pod<uint8_t>(f.get(), 3);
    write_pod<uint8_t>(f.get(), 0);  // dtype f32
    const size_t n = (size_t)clip.frames.numel();
    if (std::fwrite(clip.frames.data(), sizeof(float), n, f.get()) != n)
        throw IoError("rawvid: short write");
}

VideoClip read_rawvid(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw IoError("rawvid: cannot open: " + path.string());
    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 ||
        std::memcmp(magic, "RVID", 4) != 0)
        throw FormatError("rawvid: bad magic in " + path.string());
    const uint16_t version = read_pod<uint16_t>(f.get());
    if (version != 1) throw FormatError("rawvid: unsupported version");
    const uint32_t T = read_pod<uint32_t>(f.get());
    const uint32_t H = read_pod<uint32_t>(f.get());
    const uint32_t W = read_pod<uint32_t>(f.get());
    const uint8_t C = read_pod<uint8_t>(f.get());
    const uint8_t dtype = read_pod<uint8_t>(f.get());
    if (C != 3) throw FormatError("rawvid: C must be 3");
    if (dtype != 0) throw FormatError("rawvid: only f32 dtype supported");
    VideoClip clip;
    clip.frames = Tensor({(int64_t)T, (int64_t)H, (int64_t)W, 3});
    clip.source_id = path.filename().string();
    const size_t n = (size_t)clip.frames.numel();
    if (std::fread(clip.frames.data(), sizeof(float), n, f.get()) != n)
        throw FormatError("rawvid: truncated payload in " + path.string());
    validate_clip(clip, /*require_div8=*/false);
    return clip;
}

ClipLayout detect_layout(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) return ClipLayout::frame_dir;
    return ClipLayout::rawvid;
}

VideoClip load_clip(const std::filesystem::path& path, ClipLayout layout) {
    if (!std::filesystem::exists(path))
        throw IoError("load_clip: no such path: " + path.string());
    return layout == ClipLayout::rawvid ? read_rawvid(path)
                                        : read_frame_dir(path);
}

void write_clip(const VideoClip& clip, const std::filesystem::path& path,
                ClipLayout layout) {
    if (layout == ClipLayout::rawvid)
        write_rawvid(clip, path);
    else
        write_frame_dir(clip, path);
}

}  // namespace regen
