#include "texrd/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "texrd/error.hpp"
#include "texrd/parallel.hpp"
#include "texrd/stats.hpp"

namespace texrd::ml {

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols), cols,
                    m.data.begin() + static_cast<std::ptrdiff_t>(i * cols));
    return m;
}

Matrix Matrix::select_cols(std::span<const std::size_t> idx) const {
    Matrix m(rows, idx.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < idx.size(); ++j) m(r, j) = (*this)(r, idx[j]);
    return m;
}

double Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? i + 1 : static_cast<std::size_t>(n.right);
    }
    return nodes[i].value;
}

void validate_hyper(const ForestHyper& h) {
    if (h.trees < 1 || h.trees > 1000) throw ValidationError("forest trees must be in [1, 1000]");
    if (h.max_depth < 1 || h.max_depth > 64) throw ValidationError("forest max depth must be in [1, 64]");
    if (h.min_leaf < 1) throw ValidationError("forest min leaf must be >= 1");
    if (h.mtry < 0) throw ValidationError("forest mtry must be >= 0");
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> y, const std::vector<std::vector<std::uint32_t>>& presorted,
                const ForestHyper& h, std::size_t mtry, std::uint64_t seed)
        : X_(X), y_(y), h_(h), mtry_(mtry), rng_(seed), weight_(X.rows, 0), goes_left_(X.rows, 0),
          importance_(X.cols, 0.0) {
        std::uniform_int_distribution<std::size_t> pick(0, X.rows - 1);
        for (std::size_t k = 0; k < X.rows; ++k) ++weight_[pick(rng_)];
        order_.resize(X.cols);
        for (std::size_t f = 0; f < X.cols; ++f) {
            order_[f].reserve(X.rows);
            for (auto i : presorted[f])
                if (weight_[i] > 0) order_[f].push_back(i);
        }
        features_.resize(X.cols);
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        scratch_.reserve(X.rows);
    }

    Tree build() {
        Tree t;
        if (!order_.empty()) grow(t, 0, order_[0].size(), 0);
        else grow_leaf_only(t);
        return t;
    }

    const std::vector<double>& importance() const { return importance_; }

private:
    void grow_leaf_only(Tree& t) {
        // Zero features: a single leaf at the weighted mean.
        double w = 0.0, s = 0.0;
        for (std::size_t i = 0; i < X_.rows; ++i) {
            w += weight_[i];
            s += weight_[i] * y_[i];
        }
        t.nodes.push_back({-1, 0.0, s / w, -1});
    }

    void grow(Tree& t, std::size_t lo, std::size_t hi, int depth) {
        const auto& idx = order_[0];
        double w = 0.0, s = 0.0, ymin = INFINITY, ymax = -INFINITY;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto i = idx[k];
            w += weight_[i];
            s += weight_[i] * y_[i];
            ymin = std::min(ymin, y_[i]);
            ymax = std::max(ymax, y_[i]);
        }
        const std::size_t me = t.nodes.size();
        const double leaf_value = ymin == ymax ? ymin : std::clamp(s / w, ymin, ymax);
        t.nodes.push_back({-1, 0.0, leaf_value, -1});
        if (depth >= h_.max_depth || ymin == ymax || w < 2.0 * h_.min_leaf) return;

        // Random candidate subset: partial Fisher-Yates.
        for (std::size_t k = 0; k < mtry_; ++k) {
            std::uniform_int_distribution<std::size_t> d(k, features_.size() - 1);
            std::swap(features_[k], features_[d(rng_)]);
        }
        const double parent = s * s / w;
        double best_gain = 0.0;
        int best_f = -1;
        double best_thr = 0.0;
        for (std::size_t k = 0; k < mtry_; ++k) {
            const std::size_t f = features_[k];
            const auto& ord = order_[f];
            double wl = 0.0, sl = 0.0;
            for (std::size_t p = lo; p + 1 < hi; ++p) {
                const auto i = ord[p];
                wl += weight_[i];
                sl += weight_[i] * y_[i];
                const double a = X_(i, f), b = X_(ord[p + 1], f);
                if (!(a < b)) continue;
                const double wr = w - wl;
                if (wl < h_.min_leaf || wr < h_.min_leaf) continue;
                const double sr = s - sl;
                const double gain = sl * sl / wl + sr * sr / wr - parent;
                if (gain > best_gain * (1.0 + 1e-12) + 1e-300) {
                    best_gain = gain;
                    best_f = static_cast<int>(f);
                    double thr = 0.5 * (a + b);
                    if (!(thr < b)) thr = a;
                    best_thr = thr;
                }
            }
        }
        if (best_f < 0) return;

        importance_[static_cast<std::size_t>(best_f)] += best_gain;
        std::size_t nleft = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto i = idx[k];
            goes_left_[i] = X_(i, static_cast<std::size_t>(best_f)) <= best_thr ? 1 : 0;
            nleft += goes_left_[i];
        }
        for (auto& ord : order_) {
            scratch_.clear();
            auto out = ord.begin() + static_cast<std::ptrdiff_t>(lo);
            for (std::size_t k = lo; k < hi; ++k) {
                if (goes_left_[ord[k]]) *out++ = ord[k];
                else scratch_.push_back(ord[k]);
            }
            std::copy(scratch_.begin(), scratch_.end(), out);
        }
        t.nodes[me].feature = best_f;
        t.nodes[me].threshold = best_thr;
        grow(t, lo, lo + nleft, depth + 1);
        t.nodes[me].right = static_cast<int>(t.nodes.size());
        grow(t, lo + nleft, hi, depth + 1);
    }

    const Matrix& X_;
    std::span<const double> y_;
    const ForestHyper& h_;
    std::size_t mtry_;
    std::mt19937_64 rng_;
    std::vector<std::uint32_t> weight_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<std::size_t> features_;
    std::vector<std::uint32_t> scratch_;
    std::vector<double> importance_;
};

}  // namespace

ForestModel train_forest(const Matrix& X, std::span<const double> y, const ForestHyper& hyper, std::uint64_t seed,
                         int jobs) {
    validate_hyper(hyper);
    if (X.rows == 0) throw ValidationError("train_forest: empty dataset");
    if (y.size() != X.rows) throw ValidationError("train_forest: target length mismatch");
    for (double v : X.data)
        if (!std::isfinite(v)) throw ValidationError("train_forest: non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("train_forest: non-finite target");

    ForestModel m;
    m.hyper = hyper;
    m.seed = seed;
    m.dim = X.cols;
    std::size_t mtry = hyper.mtry > 0 ? static_cast<std::size_t>(hyper.mtry) : (X.cols + 2) / 3;
    mtry = std::min(mtry, X.cols);

    std::vector<std::vector<std::uint32_t>> presorted(X.cols);
    for (std::size_t f = 0; f < X.cols; ++f) {
        auto& o = presorted[f];
        o.resize(X.rows);
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
    }

    const auto nt = static_cast<std::size_t>(hyper.trees);
    m.trees.resize(nt);
    std::vector<std::vector<double>> imp(nt);
    parallel_for(nt, jobs, [&](std::size_t t) {
        TreeBuilder b(X, y, presorted, hyper, mtry, derive_seed(seed, t));
        m.trees[t] = b.build();
        imp[t] = b.importance();
    });

    m.importance.assign(X.cols, 0.0);
    for (const auto& v : imp)
        for (std::size_t f = 0; f < X.cols; ++f) m.importance[f] += v[f];
    const double total = std::accumulate(m.importance.begin(), m.importance.end(), 0.0);
    if (total > 0.0)
        for (auto& v : m.importance) v /= total;
    return m;
}

double predict_forest(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.dim)
        throw ValidationError("predict_forest: expected " + std::to_string(model.dim) + " features, got " +
                              std::to_string(x.size()));
    if (model.trees.empty()) throw ValidationError("predict_forest: empty model");
    double s = 0.0, lo = INFINITY, hi = -INFINITY;
    for (const auto& t : model.trees) {
        const double p = t.predict(x);
        s += p;
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return std::clamp(s / static_cast<double>(model.trees.size()), lo, hi);
}

std::vector<double> predict_forest(const ForestModel& model, const Matrix& X) {
    std::vector<double> out(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict_forest(model, X.row(r));
    return out;
}

nlohmann::json forest_to_json(const ForestModel& m) {
    nlohmann::json j;
    j["hyper"] = {{"trees", m.hyper.trees},
                  {"max_depth", m.hyper.max_depth},
                  {"min_leaf", m.hyper.min_leaf},
                  {"mtry", m.hyper.mtry}};
    j["seed"] = m.seed;
    j["dim"] = m.dim;
    j["importance"] = m.importance;
    auto trees = nlohmann::json::array();
    for (const auto& t : m.trees) {
        auto nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) nodes.push_back(nlohmann::json::array({n.feature, n.threshold, n.value, n.right}));
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
}

ForestModel forest_from_json(const nlohmann::json& j) {
    try {
        ForestModel m;
        const auto& h = j.at("hyper");
        m.hyper.trees = h.at("trees").get<int>();
        m.hyper.max_depth = h.at("max_depth").get<int>();
        m.hyper.min_leaf = h.at("min_leaf").get<int>();
        m.hyper.mtry = h.value("mtry", 0);
        m.seed = j.at("seed").get<std::uint64_t>();
        m.dim = j.at("dim").get<std::size_t>();
        m.importance = j.value("importance", std::vector<double>{});
        for (const auto& t : j.at("trees")) {
            Tree tree;
            for (const auto& n : t) {
                TreeNode node{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<double>(), n.at(3).get<int>()};
                if (node.feature >= static_cast<int>(m.dim)) throw ValidationError("tree split feature out of range");
                if (!std::isfinite(node.value)) throw ValidationError("tree leaf value not finite");
                tree.nodes.push_back(node);
            }
            if (tree.nodes.empty()) throw ValidationError("empty tree");
            for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
                const auto& n = tree.nodes[i];
                if (n.feature >= 0 && (i + 1 >= tree.nodes.size() || n.right <= static_cast<int>(i) + 1 ||
                                       n.right >= static_cast<int>(tree.nodes.size())))
                    throw ValidationError("malformed tree node list");
            }
            m.trees.push_back(std::move(tree));
        }
        validate_hyper(m.hyper);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("forest: ") + e.what());
    }
}

}  // namespace texrd::ml
