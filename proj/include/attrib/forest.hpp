#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "attrib/common.hpp"
#include "attrib/features.hpp"
#include "json.hpp"

namespace attrib {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 14;           // 14 for HAGRID/HAGRID-Clean, 22 for WebGLM-QA
    int features_per_split = 4;   // floor(sqrt(24))
    std::uint64_t seed = 0;
    bool bootstrap = true;
};

// Flattened CART node: internal nodes route on feature/threshold (x <=
// threshold goes left); leaves carry the normalized weighted class
// distribution of their training samples.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<double, 3> votes{};
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    int depth = 0;
};

class ForestModel {
public:
    ForestParams params;
    std::array<double, 3> class_weights{};
    std::vector<DecisionTree> trees;
    std::uint64_t train_fingerprint = 0;

    // Mean of per-tree leaf distributions; sums to 1.
    std::array<double, 3> predict_proba(const FeatureVector& x) const;
    // Argmax of predict_proba with ties broken Multi > One > Zero.
    RefClass predict(const FeatureVector& x) const;

    nlohmann::json to_json() const;
    static ForestModel from_json(const nlohmann::json& j);
    // Stable hash over the serialized model.
    std::uint64_t fingerprint() const;
};

// w_c = N / (3 * n_c); fatal when a class is absent.
std::array<double, 3> balanced_class_weights(const std::vector<RefClass>& y);

// Always trains with balanced class weights, per the protocol.
ForestModel fit_forest(const std::vector<FeatureVector>& X,
                       const std::vector<RefClass>& y,
                       const ForestParams& params);

// Explicit-weight variant backing fit_forest; lets tests contrast balanced
// weighting against a uniform baseline.
ForestModel fit_forest_weighted(const std::vector<FeatureVector>& X,
                                const std::vector<RefClass>& y,
                                const ForestParams& params,
                                const std::array<double, 3>& class_weights);

}  // namespace attrib
