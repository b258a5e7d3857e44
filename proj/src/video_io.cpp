#include "texrd/video_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "texrd/error.hpp"

namespace texrd::io {

namespace fs = std::filesystem;

std::string_view to_string(TextureClass c) {
    switch (c) {
        case TextureClass::static_texture: return "static";
        case TextureClass::dynamic_continuous: return "dynamic_continuous";
        case TextureClass::dynamic_discrete: return "dynamic_discrete";
    }
    return "unknown";
}

std::optional<TextureClass> parse_texture_class(std::string_view s) {
    if (s == "static") return TextureClass::static_texture;
    if (s == "dynamic_continuous") return TextureClass::dynamic_continuous;
    if (s == "dynamic_discrete") return TextureClass::dynamic_discrete;
    return std::nullopt;
}

std::size_t VideoManifestEntry::luma_bytes() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

std::size_t VideoManifestEntry::frame_bytes() const {
    const auto cw = static_cast<std::size_t>((width + 1) / 2);
    const auto ch = static_cast<std::size_t>((height + 1) / 2);
    return luma_bytes() + 2 * cw * ch;
}

FramePlane::FramePlane(int w, int h, std::uint8_t fill)
    : width(w), height(h),
      samples(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

void validate_entry(const VideoManifestEntry& e) {
    const std::string where = "manifest entry '" + e.id + "': ";
    if (e.id.empty()) throw ValidationError("manifest entry with empty id");
    if (e.width <= 0 || e.height <= 0) throw ValidationError(where + "non-positive dimensions");
    if (e.frame_count < 2) throw ValidationError(where + "frame_count must be at least 2");
    if (!(e.fps > 0.0)) throw ValidationError(where + "fps must be positive");
    std::error_code ec;
    const auto size = fs::file_size(e.path, ec);
    if (ec) throw ValidationError(where + "cannot stat " + e.path.string());
    const auto needed = e.frame_bytes() * static_cast<std::size_t>(e.frame_count);
    if (size < needed)
        throw ValidationError(where + "file holds " + std::to_string(size) + " bytes, " +
                              std::to_string(e.frame_count) + " frames need " +
                              std::to_string(needed));
}

std::vector<VideoManifestEntry> parse_manifest(std::string_view json_text, const fs::path& base_dir) {
    std::vector<VideoManifestEntry> out;
    if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) return out;

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("manifest: top level must be a JSON array");

    std::set<std::string> seen;
    for (const auto& item : doc) {
        if (!item.is_object()) throw ParseError("manifest: entries must be objects");
        VideoManifestEntry e;
        try {
            e.id = item.at("id").get<std::string>();
            e.path = item.at("path").get<std::string>();
            e.width = item.at("width").get<int>();
            e.height = item.at("height").get<int>();
            e.fps = item.at("fps").get<double>();
            e.frame_count = item.at("frames").get<int>();
            if (item.contains("class") && !item.at("class").is_null()) {
                const auto cls = item.at("class").get<std::string>();
                e.texture_class = parse_texture_class(cls);
                if (!e.texture_class) throw ParseError("manifest: unknown class '" + cls + "'");
            }
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(std::string("manifest: ") + ex.what());
        }
        if (e.path.is_relative()) e.path = base_dir / e.path;
        if (!seen.insert(e.id).second) throw ValidationError("manifest: duplicate id '" + e.id + "'");
        validate_entry(e);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<VideoManifestEntry> load_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path.parent_path());
}

std::vector<FramePlane> read_luma_frames(const VideoManifestEntry& entry, FrameRange range) {
    if (range.begin < 0 || range.end > entry.frame_count || range.begin > range.end)
        throw ValidationError("frame range [" + std::to_string(range.begin) + "," +
                              std::to_string(range.end) + ") outside [0," +
                              std::to_string(entry.frame_count) + ")");
    std::ifstream in(entry.path, std::ios::binary);
    if (!in) throw IoError("cannot open video " + entry.path.string());

    std::vector<FramePlane> frames;
    frames.reserve(static_cast<std::size_t>(range.size()));
    for (int f = range.begin; f < range.end; ++f) {
        const auto offset = static_cast<std::streamoff>(entry.frame_bytes() * static_cast<std::size_t>(f));
        in.seekg(offset);
        FramePlane plane(entry.width, entry.height);
        in.read(reinterpret_cast<char*>(plane.samples.data()),
                static_cast<std::streamsize>(plane.samples.size()));
        if (!in) throw IoError("short read at frame " + std::to_string(f) + " of " + entry.path.string());
        frames.push_back(std::move(plane));
    }
    return frames;
}

std::vector<GopView> segment_gops(int frame_count, int gop_len, const std::string& sequence_id) {
    if (gop_len < 2) throw ValidationError("gop_len must be at least 2");
    if (frame_count < gop_len)
        throw ValidationError("frame_count " + std::to_string(frame_count) + " shorter than one GoP");
    std::vector<GopView> gops;
    const int n = frame_count / gop_len;
    gops.reserve(static_cast<std::size_t>(n));
    for (int g = 0; g < n; ++g) gops.push_back({sequence_id, g, {g * gop_len, (g + 1) * gop_len}});
    return gops;
}

void write_yuv420(const fs::path& path, std::span<const FramePlane> frames, std::uint8_t chroma) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& f : frames) {
        out.write(reinterpret_cast<const char*>(f.samples.data()),
                  static_cast<std::streamsize>(f.samples.size()));
        const auto cbytes = 2 * static_cast<std::size_t>((f.width + 1) / 2) *
                            static_cast<std::size_t>((f.height + 1) / 2);
        const std::vector<char> c(cbytes, static_cast<char>(chroma));
        out.write(c.data(), static_cast<std::streamsize>(c.size()));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace texrd::io
