#include "texrd/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "texrd/error.hpp"

namespace texrd {

void PipelineConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(std::string("config: ") + what);
    };
    need(gop_len >= 3, "gop_len must be >= 3");
    need(max_frames >= gop_len, "max_frames must be >= gop_len");
    const auto& f = features;
    need(f.glcm_levels >= 2 && f.glcm_levels <= 256, "glcm.levels must be in [2, 256]");
    need(f.glcm_offset.row != 0 || f.glcm_offset.col != 0, "glcm.offset must be non-zero");
    need(std::abs(f.glcm_offset.row) < 64 && std::abs(f.glcm_offset.col) < 64, "glcm.offset too large");
    need(f.ncc.window >= 2, "ncc.window must be >= 2");
    need(f.ncc.stride >= 1, "ncc.stride must be >= 1");
    need(f.ncc.search >= 0 && f.ncc.search <= 64, "ncc.search must be in [0, 64]");
    need(f.nlp.scales >= 1 && f.nlp.scales <= 8, "nlp.scales must be in [1, 8]");
    need(f.nlp.stabilizer_ratio > 0.0 && std::isfinite(f.nlp.stabilizer_ratio), "nlp.stabilizer_ratio must be > 0");
    need(f.tc.block >= 8 && f.tc.block <= 1024, "tc.block must be in [8, 1024]");
    need(f.flow.levels >= 1 && f.flow.levels <= 8, "flow.levels must be in [1, 8]");
    need(f.flow.window >= 3 && f.flow.window % 2 == 1, "flow.window must be odd and >= 3");
    need(f.flow.iterations >= 1 && f.flow.iterations <= 20, "flow.iterations must be in [1, 20]");
    need(f.flow.poly_sigma > 0.0, "flow.poly_sigma must be > 0");
    need(f.flow.poly_radius >= 1 && f.flow.poly_radius <= 10, "flow.poly_radius must be in [1, 10]");
    ml::validate_hyper(forest);
    ml::validate_hyper(rfe.hyper);
    need(rfe.folds >= 2, "rfe.folds must be >= 2");
    need(rfe.drop_fraction > 0.0 && rfe.drop_fraction < 1.0, "rfe.drop_fraction must be in (0, 1)");
    need(relation_log_base > 0.0 && relation_log_base != 1.0 && std::isfinite(relation_log_base),
         "relation_log_base must be positive and not 1");
    need(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must be in (0, 1)");
}

namespace {

nlohmann::json hyper_json(const ml::ForestHyper& h) {
    return {{"trees", h.trees}, {"max_depth", h.max_depth}, {"min_leaf", h.min_leaf}, {"mtry", h.mtry}};
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ParseError("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ValidationError("config: unknown key '" + where + it.key() + "'");
    }
}

template <typename T>
void get(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_hyper(const nlohmann::json& j, ml::ForestHyper& h, const std::string& where) {
    check_keys(j, {"trees", "max_depth", "min_leaf", "mtry"}, where);
    get(j, "trees", h.trees);
    get(j, "max_depth", h.max_depth);
    get(j, "min_leaf", h.min_leaf);
    get(j, "mtry", h.mtry);
}

}  // namespace

nlohmann::json config_to_json(const PipelineConfig& c) {
    const auto& f = c.features;
    return {
        {"gop_len", c.gop_len},
        {"max_frames", c.max_frames},
        {"glcm", {{"levels", f.glcm_levels}, {"offset", {f.glcm_offset.row, f.glcm_offset.col}}}},
        {"ncc", {{"window", f.ncc.window}, {"stride", f.ncc.stride}, {"search", f.ncc.search}}},
        {"nlp", {{"scales", f.nlp.scales}, {"stabilizer_ratio", f.nlp.stabilizer_ratio}}},
        {"tc", {{"block", f.tc.block}}},
        {"flow",
         {{"levels", f.flow.levels},
          {"window", f.flow.window},
          {"iterations", f.flow.iterations},
          {"poly_sigma", f.flow.poly_sigma},
          {"poly_radius", f.flow.poly_radius}}},
        {"forest", hyper_json(c.forest)},
        {"rfe", {{"hyper", hyper_json(c.rfe.hyper)}, {"folds", c.rfe.folds}, {"drop_fraction", c.rfe.drop_fraction}}},
        {"seed", c.seed},
        {"relation_log_base", c.relation_log_base},
        {"split_by", std::string(ml::to_string(c.split_by))},
        {"train_fraction", c.train_fraction},
        {"feature_mode", std::string(ml::to_string(c.feature_mode))},
    };
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
    try {
        check_keys(j,
                   {"gop_len", "max_frames", "glcm", "ncc", "nlp", "tc", "flow", "forest", "rfe", "seed",
                    "relation_log_base", "split_by", "train_fraction", "feature_mode"},
                   "");
        get(j, "gop_len", c.gop_len);
        get(j, "max_frames", c.max_frames);
        auto& f = c.features;
        if (j.contains("glcm")) {
            const auto& g = j.at("glcm");
            check_keys(g, {"levels", "offset"}, "glcm.");
            get(g, "levels", f.glcm_levels);
            if (g.contains("offset")) {
                const auto o = g.at("offset").get<std::vector<int>>();
                if (o.size() != 2) throw ValidationError("config: glcm.offset must be [row, col]");
                f.glcm_offset = {o[0], o[1]};
            }
        }
        if (j.contains("ncc")) {
            const auto& n = j.at("ncc");
            check_keys(n, {"window", "stride", "search"}, "ncc.");
            get(n, "window", f.ncc.window);
            get(n, "stride", f.ncc.stride);
            get(n, "search", f.ncc.search);
        }
        if (j.contains("nlp")) {
            const auto& n = j.at("nlp");
            check_keys(n, {"scales", "stabilizer_ratio"}, "nlp.");
            get(n, "scales", f.nlp.scales);
            get(n, "stabilizer_ratio", f.nlp.stabilizer_ratio);
        }
        if (j.contains("tc")) {
            check_keys(j.at("tc"), {"block"}, "tc.");
            get(j.at("tc"), "block", f.tc.block);
        }
        if (j.contains("flow")) {
            const auto& n = j.at("flow");
            check_keys(n, {"levels", "window", "iterations", "poly_sigma", "poly_radius"}, "flow.");
            get(n, "levels", f.flow.levels);
            get(n, "window", f.flow.window);
            get(n, "iterations", f.flow.iterations);
            get(n, "poly_sigma", f.flow.poly_sigma);
            get(n, "poly_radius", f.flow.poly_radius);
        }
        if (j.contains("forest")) read_hyper(j.at("forest"), c.forest, "forest.");
        if (j.contains("rfe")) {
            const auto& r = j.at("rfe");
            check_keys(r, {"hyper", "folds", "drop_fraction"}, "rfe.");
            if (r.contains("hyper")) read_hyper(r.at("hyper"), c.rfe.hyper, "rfe.hyper.");
            get(r, "folds", c.rfe.folds);
            get(r, "drop_fraction", c.rfe.drop_fraction);
        }
        get(j, "seed", c.seed);
        get(j, "relation_log_base", c.relation_log_base);
        if (j.contains("split_by")) c.split_by = ml::parse_split_by(j.at("split_by").get<std::string>());
        get(j, "train_fraction", c.train_fraction);
        if (j.contains("feature_mode"))
            c.feature_mode = ml::parse_feature_mode(j.at("feature_mode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    nlohmann::json j;
    try {
        // CSV outputs carry their config as a "# config: {...}" comment line.
        static const std::string tag = "# config: ";
        std::string line;
        std::istringstream lines(text);
        bool csv_config = false;
        while (std::getline(lines, line)) {
            if (line.rfind(tag, 0) == 0) {
                j = nlohmann::json::parse(line.substr(tag.size()));
                csv_config = true;
                break;
            }
        }
        if (!csv_config) j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    // Outputs embed {"tool":..., "config": {...}}; accept that form too.
    if (j.is_object() && j.contains("config") && j.contains("tool")) j = j.at("config");
    return config_from_json(j);
}

}  // namespace texrd
