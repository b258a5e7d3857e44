#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "texrd/features.hpp"
#include "texrd/regression.hpp"

namespace texrd {

inline constexpr const char* kToolVersion = "0.1.0";

/// Every tunable of the pipeline. Serialized into the metadata of each output.
struct PipelineConfig {
    int gop_len = 8;
    int max_frames = 240;
    features::FeatureConfig features;
    ml::ForestHyper forest;
    ml::RfeConfig rfe;
    std::uint64_t seed = 1;
    double relation_log_base = 10.0;
    ml::SplitBy split_by = ml::SplitBy::Gop;
    double train_fraction = 0.8;
    ml::FeatureMode feature_mode = ml::FeatureMode::Rfe;

    /// Throws ValidationError on any out-of-range value.
    void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& c);
/// Missing keys keep their defaults; unknown keys are an error.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace texrd
