#include "attrib/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrib/rng.hpp"

namespace attrib {
namespace {

constexpr const char* kModelFormat = "attrib-forest-v1";
constexpr double kMinWeight = 1e-12;

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // weighted mean child impurity, lower is better
};

double gini(const std::array<double, 3>& wc, double total) {
    if (total <= kMinWeight) return 0.0;
    double g = 1.0;
    for (double w : wc) g -= (w / total) * (w / total);
    return g;
}

// Trains one tree on `indices` (bootstrap multiplicities included).
class TreeBuilder {
public:
    TreeBuilder(const std::vector<FeatureVector>& X,
                const std::vector<RefClass>& y,
                const std::array<double, 3>& class_weights,
                const ForestParams& params, Rng rng)
        : X_(X), y_(y), weights_(class_weights), params_(params), rng_(rng) {}

    DecisionTree build(std::vector<int> indices) {
        tree_.nodes.clear();
        tree_.depth = 0;
        grow(std::move(indices), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<int> indices, int depth) {
        tree_.depth = std::max(tree_.depth, depth);

        std::array<double, 3> wc{};
        for (int i : indices) wc[static_cast<int>(y_[i])] += weights_[static_cast<int>(y_[i])];
        const double total = wc[0] + wc[1] + wc[2];

        int present = 0;
        for (double w : wc) present += w > 0.0 ? 1 : 0;

        const int node_id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        SplitChoice split;
        if (depth < params_.max_depth && indices.size() >= 2 && present > 1)
            split = best_split(indices);

        if (!split.found) {
            TreeNode& leaf = tree_.nodes[node_id];
            leaf.feature = -1;
            for (int c = 0; c < 3; ++c) leaf.votes[c] = wc[c] / total;
            return node_id;
        }

        std::vector<int> left, right;
        for (int i : indices) {
            if (X_[i].values[split.feature] <= split.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        int left_id = grow(std::move(left), depth + 1);
        int right_id = grow(std::move(right), depth + 1);
        TreeNode& node = tree_.nodes[node_id];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left_id;
        node.right = right_id;
        return node_id;
    }

    // Greedy best split over randomly drawn features; drawing continues past
    // constant features until features_per_split informative ones were
    // examined (or all features are exhausted).  Ties resolve to the lowest
    // feature index, then the lowest threshold.
    SplitChoice best_split(const std::vector<int>& indices) {
        std::vector<int> order(kFeatureCount);
        std::iota(order.begin(), order.end(), 0);
        rng_.shuffle(order);

        SplitChoice best;
        int informative_seen = 0;
        for (int f : order) {
            if (informative_seen >= params_.features_per_split) break;

            sorted_.clear();
            for (int i : indices)
                sorted_.push_back({X_[i].values[f], static_cast<int>(y_[i])});
            std::sort(sorted_.begin(), sorted_.end());
            if (sorted_.front().first == sorted_.back().first) continue;
            ++informative_seen;

            std::array<double, 3> left_wc{};
            std::array<double, 3> right_wc{};
            double left_total = 0.0, right_total = 0.0;
            for (const auto& [v, c] : sorted_) {
                right_wc[c] += weights_[c];
                right_total += weights_[c];
            }
            const double grand_total = right_total;

            for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
                const int c = sorted_[i].second;
                left_wc[c] += weights_[c];
                left_total += weights_[c];
                right_wc[c] -= weights_[c];
                right_total -= weights_[c];
                if (sorted_[i].first == sorted_[i + 1].first) continue;

                double threshold =
                    sorted_[i].first +
                    (sorted_[i + 1].first - sorted_[i].first) / 2.0;
                double score = (left_total * gini(left_wc, left_total) +
                                right_total * gini(right_wc, right_total)) /
                               grand_total;
                bool better =
                    !best.found || score < best.score - 1e-15 ||
                    (std::abs(score - best.score) <= 1e-15 &&
                     (f < best.feature ||
                      (f == best.feature && threshold < best.threshold)));
                if (better) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = threshold;
                    best.score = score;
                }
            }
        }
        return best;
    }

    const std::vector<FeatureVector>& X_;
    const std::vector<RefClass>& y_;
    const std::array<double, 3>& weights_;
    const ForestParams& params_;
    Rng rng_;
    DecisionTree tree_;
    std::vector<std::pair<double, int>> sorted_;
};

std::uint64_t data_fingerprint(const std::vector<FeatureVector>& X,
                               const std::vector<RefClass>& y) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& fv : X)
        h = fnv1a64(fv.values.data(), sizeof(double) * fv.values.size(), h);
    for (RefClass c : y) {
        int v = static_cast<int>(c);
        h = fnv1a64(&v, sizeof(v), h);
    }
    return h;
}

}  // namespace

std::array<double, 3> balanced_class_weights(const std::vector<RefClass>& y) {
    std::array<double, 3> counts{};
    for (RefClass c : y) counts[static_cast<int>(c)] += 1.0;
    std::array<double, 3> weights{};
    const double n = static_cast<double>(y.size());
    for (int c = 0; c < 3; ++c) {
        if (counts[c] == 0.0)
            throw FatalError(std::string("class '") +
                             to_string(static_cast<RefClass>(c)) +
                             "' missing from training labels");
        weights[c] = n / (3.0 * counts[c]);
    }
    return weights;
}

ForestModel fit_forest(const std::vector<FeatureVector>& X,
                       const std::vector<RefClass>& y,
                       const ForestParams& params) {
    return fit_forest_weighted(X, y, params, balanced_class_weights(y));
}

ForestModel fit_forest_weighted(const std::vector<FeatureVector>& X,
                                const std::vector<RefClass>& y,
                                const ForestParams& params,
                                const std::array<double, 3>& class_weights) {
    if (X.size() != y.size() || X.size() < 3)
        throw FatalError("fit_forest needs |X| = |y| >= 3");
    if (params.n_trees < 1 || params.max_depth < 1 ||
        params.features_per_split < 1 ||
        params.features_per_split > kFeatureCount)
        throw FatalError("invalid forest parameters");
    for (const auto& fv : X)
        for (double v : fv.values)
            if (!std::isfinite(v))
                throw FatalError("non-finite feature value in training data");

    ForestModel model;
    model.params = params;
    model.class_weights = class_weights;
    model.train_fingerprint = data_fingerprint(X, y);

    const int n = static_cast<int>(X.size());
    model.trees.reserve(params.n_trees);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng tree_rng(Rng::mix(params.seed) ^
                     Rng::mix(0x7ee5 + static_cast<std::uint64_t>(t)));
        std::vector<int> indices(n);
        if (params.bootstrap) {
            for (int& i : indices)
                i = static_cast<int>(tree_rng.next_below(n));
        } else {
            std::iota(indices.begin(), indices.end(), 0);
        }
        TreeBuilder builder(X, y, model.class_weights, params,
                            tree_rng.fork(0xb0075));
        model.trees.push_back(builder.build(std::move(indices)));
    }
    return model;
}

std::array<double, 3> ForestModel::predict_proba(const FeatureVector& x) const {
    if (trees.empty()) throw FatalError("predict on an unfitted model");
    for (double v : x.values)
        if (!std::isfinite(v))
            throw FatalError("non-finite feature value in prediction input");

    std::array<double, 3> acc{};
    for (const auto& tree : trees) {
        int node = 0;
        while (tree.nodes[node].feature >= 0) {
            const TreeNode& n = tree.nodes[node];
            node = x.values[n.feature] <= n.threshold ? n.left : n.right;
        }
        for (int c = 0; c < 3; ++c) acc[c] += tree.nodes[node].votes[c];
    }
    for (double& v : acc) v /= static_cast<double>(trees.size());
    return acc;
}

RefClass ForestModel::predict(const FeatureVector& x) const {
    std::array<double, 3> p = predict_proba(x);
    int best = 2;  // Multi > One > Zero on ties
    if (p[1] > p[best]) best = 1;
    if (p[0] > p[best]) best = 0;
    return static_cast<RefClass>(best);
}

nlohmann::json ForestModel::to_json() const {
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["params"] = {{"n_trees", params.n_trees},
                   {"max_depth", params.max_depth},
                   {"features_per_split", params.features_per_split},
                   {"seed", params.seed},
                   {"bootstrap", params.bootstrap}};
    j["class_weights"] = class_weights;
    j["train_fingerprint"] = train_fingerprint;
    nlohmann::json trees_json = nlohmann::json::array();
    for (const auto& tree : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.feature < 0)
                nodes.push_back({-1, n.votes[0], n.votes[1], n.votes[2]});
            else
                nodes.push_back({n.feature, n.threshold, n.left, n.right});
        }
        trees_json.push_back({{"depth", tree.depth}, {"nodes", nodes}});
    }
    j["trees"] = std::move(trees_json);
    return j;
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != kModelFormat)
        throw FatalError("unsupported model format");
    ForestModel model;
    const auto& p = j.at("params");
    model.params.n_trees = p.at("n_trees").get<int>();
    model.params.max_depth = p.at("max_depth").get<int>();
    model.params.features_per_split = p.at("features_per_split").get<int>();
    model.params.seed = p.at("seed").get<std::uint64_t>();
    model.params.bootstrap = p.at("bootstrap").get<bool>();
    model.class_weights = j.at("class_weights").get<std::array<double, 3>>();
    model.train_fingerprint = j.at("train_fingerprint").get<std::uint64_t>();
    for (const auto& tj : j.at("trees")) {
        DecisionTree tree;
        tree.depth = tj.at("depth").get<int>();
        for (const auto& nj : tj.at("nodes")) {
            TreeNode n;
            n.feature = nj.at(0).get<int>();
            if (n.feature < 0) {
                n.votes = {nj.at(1).get<double>(), nj.at(2).get<double>(),
                           nj.at(3).get<double>()};
            } else {
                n.threshold = nj.at(1).get<double>();
                n.left = nj.at(2).get<int>();
                n.right = nj.at(3).get<int>();
            }
            tree.nodes.push_back(n);
        }
        if (tree.nodes.empty()) throw FatalError("model tree has no nodes");
        model.trees.push_back(std::move(tree));
    }
    if (static_cast<int>(model.trees.size()) != model.params.n_trees)
        throw FatalError("model tree count does not match params");
    return model;
}

std::uint64_t ForestModel::fingerprint() const {
    const std::string dump = to_json().dump();
    return fnv1a64(dump.data(), dump.size());
}

}  // namespace attrib
