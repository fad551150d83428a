#pragma once

#include <filesystem>
#include <string>

#include "regen/video/clip.hpp"

namespace regen {

enum class ClipLayout { frame_dir, rawvid };

// rawvid: little-endian "RVID", u16 version=1, u32 T/H/W, u8 C=3,
// u8 dtype (0 = f32), then frames row-major [T,H,W,C] f32 in [-1,1].
VideoClip read_rawvid(const std::filesystem::path& path);
void write_rawvid(const VideoClip& clip, const std::filesystem::path& path);

// frame_dir: %06d.png 8-bit frames plus meta.json
// {frame_rate, count, height, width}.
VideoClip read_frame_dir(const std::filesystem::path& dir);
void write_frame_dir(const VideoClip& clip, const std::filesystem::path& dir);

VideoClip load_clip(const std::filesystem::path& path, ClipLayout layout);
void write_clip(const VideoClip& clip, const std::filesystem::path& path,
                ClipLayout layout);

// ".rvid" file => rawvid, directory => frame_dir.
ClipLayout detect_layout(const std::filesystem::path& path);

}  // namespace regen
