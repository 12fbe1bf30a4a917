#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pipegrad {

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;       // internal only
    double threshold = 0.0; // internal only; go right iff x[feature] > threshold
    int left = -1;
    int right = -1;
    double value = 0.0;     // leaf only, learning rate already folded in

    static TreeNode leaf(double v) { return TreeNode{true, -1, 0.0, -1, -1, v}; }
    static TreeNode split(int feature, double threshold, int left, int right) {
        return TreeNode{false, feature, threshold, left, right, 0.0};
    }
};

struct Tree {
    std::vector<TreeNode> nodes;
    int root = 0;

    std::size_t leaf_count() const;
    std::size_t internal_count() const;
    // Throws unless the nodes form one rooted binary tree over features < num_features.
    void validate(std::size_t num_features) const;
};

// Canonical orderings shared by the reference predictor, the leaf featurizer
// and the translator: internal nodes in preorder, leaves left to right.
struct TreeLayout {
    std::vector<int> internal_nodes;
    std::vector<int> leaves;
    std::vector<int> internal_pos;  // node id -> position in internal_nodes, -1 for leaves
    std::vector<int> leaf_pos;      // node id -> position in leaves, -1 for internal nodes
};
TreeLayout layout(const Tree& tree);

struct TreeEnsemble {
    std::vector<Tree> trees;
    double base_score = 0.0;
    std::size_t num_features = 0;

    std::size_t total_leaves() const;
    void validate() const;
};

// Node id of the leaf reached by x.
int reached_leaf(const Tree& tree, std::span<const double> x);
double predict_tree(const Tree& tree, std::span<const double> x);
double predict_ensemble(const TreeEnsemble& ens, std::span<const double> x);

// Concatenated per-tree indicator blocks (block width = leaf count of the tree).
std::vector<double> leaf_onehot(const TreeEnsemble& ens, std::span<const double> x);
// Position of the active entry inside each tree's block.
std::vector<std::size_t> leaf_indices(const TreeEnsemble& ens, std::span<const double> x);

}  // namespace pipegrad
