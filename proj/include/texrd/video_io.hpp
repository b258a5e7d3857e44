#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace texrd::io {

enum class TextureClass { static_texture, dynamic_continuous, dynamic_discrete };

std::string_view to_string(TextureClass c);
std::optional<TextureClass> parse_texture_class(std::string_view s);

/// One raw planar 8-bit 4:2:0 sequence listed in a manifest.
struct VideoManifestEntry {
    std::string id;
    std::filesystem::path path;
    int width = 0;
    int height = 0;
    double fps = 0.0;
    int frame_count = 0;
    std::optional<TextureClass> texture_class;

    std::size_t luma_bytes() const;
    std::size_t frame_bytes() const;  // luma + both chroma planes
};

/// 8-bit luma plane, row-major.
struct FramePlane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> samples;

    FramePlane() = default;
    FramePlane(int w, int h, std::uint8_t fill = 0);

    std::uint8_t at(int row, int col) const {
        return samples[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(col)];
    }
    std::uint8_t& at(int row, int col) {
        return samples[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(col)];
    }
    std::size_t size() const { return samples.size(); }
    bool operator==(const FramePlane&) const = default;
};

/// Half-open frame index interval.
struct FrameRange {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
    bool operator==(const FrameRange&) const = default;
};

struct GopView {
    std::string sequence_id;
    int gop_index = 0;
    FrameRange frames;
};

/// Throws ValidationError when an entry breaks a manifest invariant,
/// including a video file shorter than frame_count frames.
void validate_entry(const VideoManifestEntry& e);

/// JSON array of {id, path, width, height, fps, frames, class?}. Relative
/// paths resolve against the manifest's directory. A blank file is an empty
/// manifest.
std::vector<VideoManifestEntry> load_manifest(const std::filesystem::path& path);
std::vector<VideoManifestEntry> parse_manifest(std::string_view json_text,
                                               const std::filesystem::path& base_dir);

/// Reads the luma plane of every frame in `range`; chroma is skipped.
std::vector<FramePlane> read_luma_frames(const VideoManifestEntry& entry, FrameRange range);

/// floor(frame_count / gop_len) contiguous GoPs; a trailing partial GoP is dropped.
std::vector<GopView> segment_gops(int frame_count, int gop_len, const std::string& sequence_id = {});

/// Writes frames as raw 4:2:0 with constant chroma. Used to build test clips.
void write_yuv420(const std::filesystem::path& path, std::span<const FramePlane> frames,
                  std::uint8_t chroma = 128);

}  // namespace texrd::io
