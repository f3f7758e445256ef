#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "affrank/errors.hpp"
#include "affrank/features.hpp"

namespace affrank {

struct GbdtConfig {
    int tree_count = 300;
    int max_depth = 3;
    double shrinkage = 0.1;
    int min_samples_leaf = 5;
    double feature_subsample = 1.0; // fraction of features offered per tree; 1 = all
    std::uint64_t seed = 0;

    void validate() const {
        if (tree_count < 0) throw config_error("gbdt: tree_count must be >= 0");
        if (max_depth < 0) throw config_error("gbdt: max_depth must be >= 0");
        if (!(shrinkage > 0.0) || shrinkage > 1.0)
            throw config_error("gbdt: shrinkage must be in (0, 1]");
        if (min_samples_leaf < 1) throw config_error("gbdt: min_samples_leaf must be >= 1");
        if (!(feature_subsample > 0.0) || feature_subsample > 1.0)
            throw config_error("gbdt: feature_subsample must be in (0, 1]");
    }

    nlohmann::json to_json() const {
        return {{"tree_count", tree_count},
                {"max_depth", max_depth},
                {"shrinkage", shrinkage},
                {"min_samples_leaf", min_samples_leaf},
                {"feature_subsample", feature_subsample},
                {"seed", seed}};
    }
    static GbdtConfig from_json(const nlohmann::json& j) {
        GbdtConfig c;
        if (j.contains("tree_count")) c.tree_count = j.at("tree_count").get<int>();
        if (j.contains("max_depth")) c.max_depth = j.at("max_depth").get<int>();
        if (j.contains("shrinkage")) c.shrinkage = j.at("shrinkage").get<double>();
        if (j.contains("min_samples_leaf")) c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
        if (j.contains("feature_subsample"))
            c.feature_subsample = j.at("feature_subsample").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        c.validate();
        return c;
    }
};

/// Flat regression-tree node. feature < 0 marks a leaf carrying `value`
/// (a mean residual, applied with the ensemble shrinkage); internal nodes
/// route rows left when x < threshold.
struct GbdtNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    double gain = 0.0; // squared-error reduction of this split
    int left = -1;
    int right = -1;
    bool is_leaf() const { return feature < 0; }
};

struct GbdtTree {
    std::vector<GbdtNode> nodes; // node 0 is the root

    double evaluate(std::span<const double> row, std::span<const size_t> column_of_feature) const {
        int n = 0;
        while (!nodes[n].is_leaf()) {
            const double x = row[column_of_feature[nodes[n].feature]];
            n = x < nodes[n].threshold ? nodes[n].left : nodes[n].right;
        }
        return nodes[n].value;
    }
};

/// Additive least-squares ensemble: prediction = base + shrinkage * sum of
/// tree outputs.
struct GbdtModel {
    double base_prediction = 0.0;
    double shrinkage = 0.1;
    std::vector<GbdtTree> trees;
    std::vector<std::string> feature_names;
    GbdtConfig config;
    std::vector<double> training_loss; // squared error after the base, then after each tree

    double predict_row(std::span<const double> row, std::span<const size_t> column_of_feature) const {
        double p = base_prediction;
        for (const auto& t : trees) p += shrinkage * t.evaluate(row, column_of_feature);
        return p;
    }

    /// Squared-error reduction credited to each feature, normalized to sum to
    /// one over the features that ever split.
    std::map<std::string, double> feature_importance() const {
        std::vector<double> raw(feature_names.size(), 0.0);
        for (const auto& t : trees)
            for (const auto& n : t.nodes)
                if (!n.is_leaf()) raw[static_cast<size_t>(n.feature)] += n.gain;
        const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
        std::map<std::string, double> out;
        if (total <= 0.0) return out;
        for (size_t f = 0; f < raw.size(); ++f)
            if (raw[f] > 0.0) out[feature_names[f]] = raw[f] / total;
        return out;
    }

    nlohmann::json to_json() const;
    static GbdtModel from_json(const nlohmann::json& j);
};

namespace detail {

// A split is worth taking only when its squared-error reduction clears this
// floor; it screens out same-valued nodes whose prefix sums carry rounding
// noise without blocking any real signal.
inline constexpr double kMinSplitGain = 1e-12;

struct SplitCandidate {
    double gain = kMinSplitGain;
    int feature = -1;
    double threshold = 0.0;
    bool valid() const { return feature >= 0; }
};

struct NodeStats {
    size_t count = 0;
    double sum = 0.0;
};

} // namespace detail

inline GbdtModel gbdt_fit(const FeatureMatrix& X, std::span<const double> y,
                          const GbdtConfig& config) {
    config.validate();
    const size_t n_rows = X.row_count();
    const size_t n_features = X.column_count();
    if (n_rows == 0) throw data_error("gbdt_fit: no training rows");
    if (y.size() != n_rows) throw data_error("gbdt_fit: target length mismatch");
    for (double v : X.values())
        if (!std::isfinite(v)) throw data_error("gbdt_fit: non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw data_error("gbdt_fit: non-finite target value");

    GbdtModel model;
    model.shrinkage = config.shrinkage;
    model.feature_names = X.columns();
    model.config = config;
    model.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n_rows);

    // Column-major copy and one presort per feature; every tree reuses them.
    std::vector<std::vector<double>> col(n_features, std::vector<double>(n_rows));
    for (size_t r = 0; r < n_rows; ++r)
        for (size_t f = 0; f < n_features; ++f) col[f][r] = X.at(r, f);
    std::vector<std::vector<std::uint32_t>> order(n_features);
    for (size_t f = 0; f < n_features; ++f) {
        auto& idx = order[f];
        idx.resize(n_rows);
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (col[f][a] != col[f][b]) return col[f][a] < col[f][b];
            return a < b;
        });
    }

    std::vector<double> prediction(n_rows, model.base_prediction);
    std::vector<double> residual(n_rows);
    std::vector<std::int32_t> node_of(n_rows);
    std::mt19937_64 rng(config.seed);

    auto loss = [&] {
        double s = 0.0;
        for (size_t i = 0; i < n_rows; ++i) {
            const double d = y[i] - prediction[i];
            s += d * d;
        }
        return s;
    };
    model.training_loss.push_back(loss());

    std::vector<size_t> all_features(n_features);
    std::iota(all_features.begin(), all_features.end(), size_t{0});

    for (int m = 0; m < config.tree_count; ++m) {
        for (size_t i = 0; i < n_rows; ++i) residual[i] = y[i] - prediction[i];

        std::vector<size_t> features = all_features;
        if (config.feature_subsample < 1.0 && n_features > 1) {
            const size_t k = std::max<size_t>(
                1, static_cast<size_t>(std::llround(config.feature_subsample *
                                                    static_cast<double>(n_features))));
            for (size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<size_t> pick(i, n_features - 1);
                std::swap(features[i], features[pick(rng)]);
            }
            features.resize(k);
            std::sort(features.begin(), features.end());
        }

        GbdtTree tree;
        tree.nodes.emplace_back(); // root, provisional leaf
        std::fill(node_of.begin(), node_of.end(), 0);
        std::vector<std::int32_t> frontier{0};

        for (int depth = 0; depth < config.max_depth && !frontier.empty(); ++depth) {
            // Flat per-node scratch indexed by node id; the tree stays small
            // (at most 2^depth frontier nodes), rows are the long dimension.
            const size_t n_nodes = tree.nodes.size();
            std::vector<detail::NodeStats> totals(n_nodes);
            for (size_t i = 0; i < n_rows; ++i) {
                auto& t = totals[static_cast<size_t>(node_of[i])];
                t.count += 1;
                t.sum += residual[i];
            }

            std::vector<char> splittable(n_nodes, 0);
            bool any_splittable = false;
            for (auto id : frontier)
                if (totals[static_cast<size_t>(id)].count >=
                    2 * static_cast<size_t>(config.min_samples_leaf)) {
                    splittable[static_cast<size_t>(id)] = 1;
                    any_splittable = true;
                }
            if (!any_splittable) break;

            // One sweep per feature over the presorted rows, accumulating a
            // running left side for every splittable node simultaneously.
            std::vector<detail::SplitCandidate> best(n_nodes);
            std::vector<detail::NodeStats> left(n_nodes);
            std::vector<double> last_value(n_nodes, 0.0);
            std::vector<char> has_left(n_nodes, 0);
            const auto min_leaf = static_cast<size_t>(config.min_samples_leaf);
            for (size_t f : features) {
                std::fill(left.begin(), left.end(), detail::NodeStats{});
                std::fill(has_left.begin(), has_left.end(), 0);
                const auto& values = col[f];
                for (std::uint32_t r : order[f]) {
                    const auto node = static_cast<size_t>(node_of[r]);
                    if (!splittable[node]) continue;
                    auto& l = left[node];
                    const detail::NodeStats& tot = totals[node];
                    const double v = values[r];
                    if (has_left[node] && last_value[node] < v && l.count >= min_leaf &&
                        tot.count - l.count >= min_leaf) {
                        double mid = last_value[node] + (v - last_value[node]) / 2.0;
                        if (!(last_value[node] < mid)) mid = v; // adjacent doubles collapse
                        const double rs = tot.sum - l.sum;
                        const size_t rc = tot.count - l.count;
                        const double gain = l.sum * l.sum / static_cast<double>(l.count) +
                                            rs * rs / static_cast<double>(rc) -
                                            tot.sum * tot.sum / static_cast<double>(tot.count);
                        if (gain > best[node].gain) {
                            best[node].gain = gain;
                            best[node].feature = static_cast<int>(f);
                            best[node].threshold = mid;
                        }
                    }
                    l.count += 1;
                    l.sum += residual[r];
                    last_value[node] = v;
                    has_left[node] = 1;
                }
            }

            // Materialize the chosen splits and re-route their rows.
            std::vector<std::int32_t> next_frontier;
            bool any_split = false;
            for (auto id : frontier) {
                const detail::SplitCandidate& cand = best[static_cast<size_t>(id)];
                if (!cand.valid()) continue;
                any_split = true;
                GbdtNode& node = tree.nodes[static_cast<size_t>(id)];
                node.feature = cand.feature;
                node.threshold = cand.threshold;
                node.gain = cand.gain;
                node.left = static_cast<int>(tree.nodes.size());
                node.right = node.left + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                next_frontier.push_back(node.left);
                next_frontier.push_back(node.right);
            }
            if (!any_split) break;
            for (size_t i = 0; i < n_rows; ++i) {
                const GbdtNode& node = tree.nodes[static_cast<size_t>(node_of[i])];
                if (!node.is_leaf())
                    node_of[i] = col[static_cast<size_t>(node.feature)][i] < node.threshold
                                     ? node.left
                                     : node.right;
            }
            frontier = std::move(next_frontier);
        }

        // Leaf values are mean residuals over the rows that settled there.
        std::vector<detail::NodeStats> leaf_stats(tree.nodes.size());
        for (size_t i = 0; i < n_rows; ++i) {
            auto& s = leaf_stats[static_cast<size_t>(node_of[i])];
            s.count += 1;
            s.sum += residual[i];
        }
        for (size_t id = 0; id < tree.nodes.size(); ++id)
            if (leaf_stats[id].count > 0)
                tree.nodes[id].value =
                    leaf_stats[id].sum / static_cast<double>(leaf_stats[id].count);

        for (size_t i = 0; i < n_rows; ++i)
            prediction[i] +=
                config.shrinkage * tree.nodes[static_cast<size_t>(node_of[i])].value;
        model.trees.push_back(std::move(tree));
        model.training_loss.push_back(loss());
    }
    return model;
}

/// Maps the model's feature names onto a matrix's columns; a referenced
/// feature missing from the matrix is an error naming that feature.
inline std::vector<size_t> resolve_feature_columns(const std::vector<std::string>& feature_names,
                                                   const FeatureMatrix& rows) {
    std::vector<size_t> column_of(feature_names.size());
    for (size_t f = 0; f < feature_names.size(); ++f) {
        auto idx = rows.column_index(feature_names[f]);
        if (!idx) throw data_error("prediction input lacks feature column: " + feature_names[f]);
        column_of[f] = *idx;
    }
    return column_of;
}

inline std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureMatrix& rows) {
    const auto column_of = resolve_feature_columns(model.feature_names, rows);
    std::vector<double> out(rows.row_count());
    for (size_t r = 0; r < rows.row_count(); ++r)
        out[r] = model.predict_row(rows.row(r), column_of);
    return out;
}

namespace detail {

inline nlohmann::json gbdt_node_to_json(const GbdtTree& tree, int id,
                                        const std::vector<std::string>& names) {
    const GbdtNode& n = tree.nodes[static_cast<size_t>(id)];
    if (n.is_leaf()) return {{"value", n.value}};
    return {{"feature", names[static_cast<size_t>(n.feature)]},
            {"threshold", n.threshold},
            {"gain", n.gain},
            {"left", gbdt_node_to_json(tree, n.left, names)},
            {"right", gbdt_node_to_json(tree, n.right, names)}};
}

inline int gbdt_node_from_json(const nlohmann::json& j, GbdtTree& tree,
                               const std::map<std::string, int>& index_of) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("feature")) {
        const std::string name = j.at("feature").get<std::string>();
        auto it = index_of.find(name);
        if (it == index_of.end()) throw data_error("model references unknown feature: " + name);
        tree.nodes[static_cast<size_t>(id)].feature = it->second;
        tree.nodes[static_cast<size_t>(id)].threshold = j.at("threshold").get<double>();
        tree.nodes[static_cast<size_t>(id)].gain = j.value("gain", 0.0);
        const int l = gbdt_node_from_json(j.at("left"), tree, index_of);
        const int r = gbdt_node_from_json(j.at("right"), tree, index_of);
        tree.nodes[static_cast<size_t>(id)].left = l;
        tree.nodes[static_cast<size_t>(id)].right = r;
    } else {
        tree.nodes[static_cast<size_t>(id)].value = j.at("value").get<double>();
    }
    return id;
}

} // namespace detail

inline nlohmann::json GbdtModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["family"] = "gbdt";
    j["base_prediction"] = base_prediction;
    j["shrinkage"] = shrinkage;
    j["feature_names"] = feature_names;
    j["config"] = config.to_json();
    j["training_loss"] = training_loss;
    nlohmann::json jtrees = nlohmann::json::array();
    for (const auto& t : trees) jtrees.push_back(detail::gbdt_node_to_json(t, 0, feature_names));
    j["trees"] = std::move(jtrees);
    return j;
}

inline GbdtModel GbdtModel::from_json(const nlohmann::json& j) {
    if (j.value("family", "") != std::string("gbdt"))
        throw config_error("model file is not a gbdt model");
    GbdtModel m;
    m.base_prediction = j.at("base_prediction").get<double>();
    m.shrinkage = j.at("shrinkage").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("config")) m.config = GbdtConfig::from_json(j.at("config"));
    if (j.contains("training_loss"))
        m.training_loss = j.at("training_loss").get<std::vector<double>>();
    std::map<std::string, int> index_of;
    for (size_t f = 0; f < m.feature_names.size(); ++f)
        index_of[m.feature_names[f]] = static_cast<int>(f);
    for (const auto& jt : j.at("trees")) {
        GbdtTree t;
        detail::gbdt_node_from_json(jt, t, index_of);
        m.trees.push_back(std::move(t));
    }
    return m;
}

} // namespace affrank
