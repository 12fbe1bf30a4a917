#include "pipegrad/tree.hpp"

#include <string>

#include "pipegrad/error.hpp"

namespace pipegrad {

std::size_t Tree::leaf_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node.is_leaf ? 1 : 0;
    return n;
}

std::size_t Tree::internal_count() const { return nodes.size() - leaf_count(); }

void Tree::validate(std::size_t num_features) const {
    if (nodes.empty()) throw Error("tree has no nodes");
    const int n = static_cast<int>(nodes.size());
    if (root < 0 || root >= n) throw Error("tree root out of range");
    std::vector<int> visits(nodes.size(), 0);
    std::vector<int> stack{root};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (++visits[id] > 1) throw Error("tree node " + std::to_string(id) + " reached twice (cycle or shared child)");
        const auto& node = nodes[id];
        if (node.is_leaf) {
            if (node.left != -1 || node.right != -1) throw Error("leaf node " + std::to_string(id) + " has children");
            continue;
        }
        if (node.left < 0 || node.left >= n || node.right < 0 || node.right >= n)
            throw Error("internal node " + std::to_string(id) + " must have two children");
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= num_features)
            throw Error("internal node " + std::to_string(id) + " uses feature " + std::to_string(node.feature) +
                        " but input has " + std::to_string(num_features) + " features");
        stack.push_back(node.right);
        stack.push_back(node.left);
    }
    for (int id = 0; id < n; ++id)
        if (visits[id] == 0) throw Error("tree node " + std::to_string(id) + " unreachable from root");
}

TreeLayout layout(const Tree& tree) {
    TreeLayout out;
    out.internal_pos.assign(tree.nodes.size(), -1);
    out.leaf_pos.assign(tree.nodes.size(), -1);
    std::vector<int> stack{tree.root};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const auto& node = tree.nodes[id];
        if (node.is_leaf) {
            out.leaf_pos[id] = static_cast<int>(out.leaves.size());
            out.leaves.push_back(id);
        } else {
            out.internal_pos[id] = static_cast<int>(out.internal_nodes.size());
            out.internal_nodes.push_back(id);
            stack.push_back(node.right);
            stack.push_back(node.left);
        }
    }
    return out;
}

std::size_t TreeEnsemble::total_leaves() const {
    std::size_t n = 0;
    for (const auto& t : trees) n += t.leaf_count();
    return n;
}

void TreeEnsemble::validate() const {
    for (const auto& t : trees) t.validate(num_features);
}

int reached_leaf(const Tree& tree, std::span<const double> x) {
    int id = tree.root;
    while (!tree.nodes[id].is_leaf) {
        const auto& node = tree.nodes[id];
        id = x[node.feature] > node.threshold ? node.right : node.left;
    }
    return id;
}

double predict_tree(const Tree& tree, std::span<const double> x) { return tree.nodes[reached_leaf(tree, x)].value; }

double predict_ensemble(const TreeEnsemble& ens, std::span<const double> x) {
    if (x.size() != ens.num_features)
        throw Error("ensemble expects " + std::to_string(ens.num_features) + " features, got " +
                    std::to_string(x.size()));
    double score = ens.base_score;
    for (const auto& t : ens.trees) score += predict_tree(t, x);
    return score;
}

std::vector<std::size_t> leaf_indices(const TreeEnsemble& ens, std::span<const double> x) {
    if (x.size() != ens.num_features)
        throw Error("ensemble expects " + std::to_string(ens.num_features) + " features, got " +
                    std::to_string(x.size()));
    std::vector<std::size_t> out;
    out.reserve(ens.trees.size());
    for (const auto& t : ens.trees) {
        // Leaves are numbered left to right; count leaves preceding the reached one.
        const TreeLayout lay = layout(t);
        out.push_back(static_cast<std::size_t>(lay.leaf_pos[reached_leaf(t, x)]));
    }
    return out;
}

std::vector<double> leaf_onehot(const TreeEnsemble& ens, std::span<const double> x) {
    const auto idx = leaf_indices(ens, x);
    std::vector<double> out(ens.total_leaves(), 0.0);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ens.trees.size(); ++k) {
        out[offset + idx[k]] = 1.0;
        offset += ens.trees[k].leaf_count();
    }
    return out;
}

}  // namespace pipegrad
