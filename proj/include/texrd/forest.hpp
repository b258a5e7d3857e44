#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace texrd::ml {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    Matrix select_rows(std::span<const std::size_t> idx) const;
    Matrix select_cols(std::span<const std::size_t> idx) const;
};

struct ForestHyper {
    int trees = 100;
    int max_depth = 16;
    int min_leaf = 5;
    int mtry = 0;  // split candidates per node; 0 means ceil(d/3)
};

/// Preorder node list. The left child of node i is i+1; `right` indexes the
/// right child. Leaves have feature -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
};

struct ForestModel {
    ForestHyper hyper;
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    std::vector<Tree> trees;
    std::vector<double> importance;  // impurity decrease per feature, sums to 1 unless all zero
};

void validate_hyper(const ForestHyper& h);

/// Bootstrap CART forest with variance-reduction splits. Each tree draws from
/// its own stream derive_seed(seed, tree), so results do not depend on `jobs`.
ForestModel train_forest(const Matrix& X, std::span<const double> y, const ForestHyper& hyper, std::uint64_t seed,
                         int jobs = 1);
double predict_forest(const ForestModel& model, std::span<const double> x);
std::vector<double> predict_forest(const ForestModel& model, const Matrix& X);

nlohmann::json forest_to_json(const ForestModel& m);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace texrd::ml
