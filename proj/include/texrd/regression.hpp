#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "texrd/features.hpp"
#include "texrd/forest.hpp"
#include "texrd/rd_model.hpp"

namespace texrd::ml {

struct Dataset {
    Matrix X;
    std::vector<double> y;
    std::string target_name;
    std::vector<std::string> groups;  // sequence id per row; optional

    void validate(std::size_t min_rows = 1) const;
};

/// Per-feature z-score from a training split. Zero-variance features are
/// dropped: they normalize to 0 and are listed in `dropped`.
struct Normalizer {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::size_t> dropped;

    static Normalizer fit(const Matrix& X);
    bool is_dropped(std::size_t f) const;
    std::vector<double> normalize(std::span<const double> x) const;
    Matrix normalize(const Matrix& X) const;
    /// Inverse of normalize for kept features; dropped features come back as their mean.
    std::vector<double> denormalize(std::span<const double> z) const;
};

struct Metrics {
    double pcc = std::numeric_limits<double>::quiet_NaN();
    double srocc = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    double mae = 0.0;
    double nrmse = 0.0;  // RMSE / range of the true values
};

/// PCC/SROCC/R2 are NaN when the true values have zero variance.
Metrics evaluate(std::span<const double> truth, std::span<const double> pred);

/// Fits on (X_train, y_train) and returns predictions for X_test.
using Learner = std::function<std::vector<double>(const Matrix& X_train, std::span<const double> y_train,
                                                  const Matrix& X_test)>;
Learner forest_learner(const ForestHyper& hyper, std::uint64_t seed, int jobs = 1);

struct CvReport {
    std::vector<Metrics> folds;
    Metrics aggregate;  // mean over folds; PCC/SROCC/R2 over the folds where they are defined
    std::vector<std::size_t> excluded_folds;  // zero target variance
    std::vector<std::vector<std::size_t>> fold_rows;
};

/// Seeded shuffle, contiguous partition into `folds` parts (sizes differ by at most one).
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t folds, std::uint64_t seed);
CvReport cross_validate(const Dataset& d, std::size_t folds, std::uint64_t seed, const Learner& learner);

struct RfeConfig {
    ForestHyper hyper{50, 16, 5, 0};
    std::size_t folds = 10;
    double drop_fraction = 0.10;
};

struct RfeResult {
    std::vector<std::size_t> selected;              // column indices, ascending
    std::vector<std::size_t> ranking;               // best first
    std::vector<std::pair<std::size_t, double>> cv_mse;  // (subset size, inner CV MSE), in visit order
};

/// Recursive feature elimination by forest impurity importance. The subset
/// with the lowest inner CV error wins; ties go to the smaller subset.
RfeResult rfe_select(const Dataset& d, std::uint64_t seed, const RfeConfig& cfg = {}, int jobs = 1);

enum class SplitBy { Gop, Sequence };
std::string_view to_string(SplitBy s);
SplitBy parse_split_by(std::string_view s);

struct Split {
    std::vector<std::size_t> train, test;  // ascending
};

/// Seeded train/test split. By sequence, whole groups go to one side.
Split split_rows(std::span<const std::string> groups, double train_fraction, SplitBy by, std::uint64_t seed);

enum class FeatureMode { Rfe, Preset, All };
FeatureMode parse_feature_mode(std::string_view s);
std::string_view to_string(FeatureMode m);

/// Fixed feature subsets for each anchor parameter (0-based feature indices).
std::vector<std::size_t> fixed_feature_preset(rd::RdModelKind kind, std::size_t param_index);

struct FitRecord {
    std::string sequence_id;
    int gop_index = 0;
    rd::RdFit fit;
};

struct TrainConfig {
    std::uint64_t seed = 1;
    ForestHyper hyper;
    RfeConfig rfe;
    FeatureMode features = FeatureMode::Rfe;
    SplitBy split_by = SplitBy::Gop;
    double train_fraction = 0.8;
    double relation_log_base = 10.0;
    int jobs = 1;
};

struct AnchorModel {
    std::size_t param_index = 0;
    std::string name;
    std::vector<std::size_t> selected_features;  // indices into F1..F44
    ForestModel forest;
};

struct ParamReport {
    std::string name;
    bool regressed = false;
    Metrics test;
};

struct TrainedPredictor {
    rd::RdModelKind kind = rd::RdModelKind::Exp;
    double relation_log_base = 10.0;
    Normalizer normalizer;
    std::vector<AnchorModel> anchors;
    nlohmann::json training_report;
};

struct TrainOutcome {
    TrainedPredictor predictor;
    Split split;
    std::vector<ParamReport> params;  // all parameters in coefficient order
    std::vector<std::size_t> joined_rows;  // index into fits per dataset row
};

/// Joins features and fits on (sequence_id, gop_index); every fit must have a
/// feature row. Needs >= 50 joined rows.
TrainOutcome train_predictor(std::span<const features::FeatureVector> features, std::span<const FitRecord> fits,
                             rd::RdModelKind kind, const TrainConfig& cfg);

rd::RdFit predict_rd_curve(const TrainedPredictor& p, const features::FeatureVector& fv);

nlohmann::json predictor_to_json(const TrainedPredictor& p);
TrainedPredictor predictor_from_json(const nlohmann::json& j);
void save_predictor(const TrainedPredictor& p, const std::filesystem::path& path);
TrainedPredictor load_predictor(const std::filesystem::path& path);

nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace texrd::ml
