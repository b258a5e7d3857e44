#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "texrd/coherence.hpp"
#include "texrd/glcm.hpp"
#include "texrd/laplacian.hpp"
#include "texrd/ncc.hpp"
#include "texrd/optical_flow.hpp"
#include "texrd/video_io.hpp"

namespace texrd::features {

inline constexpr std::size_t kFeatureCount = 44;

/// Table mnemonics of F1..F44, in order.
const std::array<std::string_view, kFeatureCount>& feature_mnemonics();
/// "F1".."F44".
std::string feature_id(std::size_t index);
/// Accepts "F7" or a mnemonic; throws ValidationError otherwise.
std::size_t feature_index(std::string_view name);

struct FeatureConfig {
    int glcm_levels = 32;
    PixelOffset glcm_offset{0, 1};
    NccParams ncc;
    NlpParams nlp;
    CoherenceParams tc;
    FlowParams flow;
};

struct FeatureVector {
    std::string sequence_id;
    int gop_index = 0;
    std::array<double, kFeatureCount> values{};
};

struct GopFeatures {
    std::array<double, kFeatureCount> values{};
    /// Number of non-finite intermediates replaced by 0, per feature.
    std::array<int, kFeatureCount> substitutions{};
};

/// F1..F44 for one GoP of at least three frames.
GopFeatures extract_gop_features(std::span<const io::FramePlane> frames, const FeatureConfig& cfg = {});

/// Header comment with the mnemonics, then `sequence_id,gop_index,F1,...,F44`.
/// `metadata` lines are written first as '#' comments.
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows,
                       std::span<const std::string> metadata = {});
std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path);

}  // namespace texrd::features
