#include "pipegrad/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pipegrad/error.hpp"
#include "pipegrad/detail/math.hpp"

namespace pipegrad {

using detail::sigmoid;

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool valid() const { return feature >= 0; }
};

struct GrowingLeaf {
    int node = 0;
    std::vector<std::vector<int>> sorted;  // per feature, row ids ordered by value
    double grad_sum = 0.0;
    double hess_sum = 0.0;
    SplitCandidate best;
};

class TreeGrower {
public:
    TreeGrower(const Eigen::MatrixXd& x, const std::vector<std::vector<int>>& presorted,
               std::span<const double> grad, std::span<const double> hess, const GbdtConfig& cfg)
        : x_(x), presorted_(presorted), grad_(grad), hess_(hess), cfg_(cfg) {}

    double score(double g, double h) const {
        const double denom = std::max(h + cfg_.l2, cfg_.hessian_floor);
        return g * g / denom;
    }

    void find_best(GrowingLeaf& leaf) const {
        leaf.best = SplitCandidate{};
        const double parent = score(leaf.grad_sum, leaf.hess_sum);
        const int min_leaf = std::max(1, cfg_.min_samples_leaf);
        for (std::size_t f = 0; f < leaf.sorted.size(); ++f) {
            const auto& order = leaf.sorted[f];
            const std::size_t n = order.size();
            double gl = 0.0, hl = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const int r = order[k];
                gl += grad_[r];
                hl += hess_[r];
                const double a = x_(r, static_cast<Eigen::Index>(f));
                const double b = x_(order[k + 1], static_cast<Eigen::Index>(f));
                if (!(a < b)) continue;
                if (static_cast<int>(k + 1) < min_leaf || static_cast<int>(n - k - 1) < min_leaf) continue;
                const double gain = score(gl, hl) + score(leaf.grad_sum - gl, leaf.hess_sum - hl) - parent;
                // Strict improvement keeps the lowest feature, then lowest threshold, on ties.
                if (gain > leaf.best.gain) {
                    double mid = a + (b - a) / 2.0;
                    if (!(mid >= a && mid < b)) mid = a;
                    leaf.best = SplitCandidate{gain, static_cast<int>(f), mid};
                }
            }
        }
    }

    Tree grow(std::vector<double>& leaf_values_out, std::vector<int>& row_leaf_out) {
        const std::size_t n = static_cast<std::size_t>(x_.rows());
        const std::size_t d = static_cast<std::size_t>(x_.cols());
        Tree tree;
        tree.nodes.push_back(TreeNode::leaf(0.0));
        tree.root = 0;

        std::vector<GrowingLeaf> leaves(1);
        leaves[0].node = 0;
        leaves[0].sorted = presorted_;
        for (std::size_t r = 0; r < n; ++r) {
            leaves[0].grad_sum += grad_[r];
            leaves[0].hess_sum += hess_[r];
        }
        find_best(leaves[0]);

        std::vector<char> goes_right(n, 0);
        while (static_cast<int>(leaves.size()) < cfg_.max_leaves) {
            int pick = -1;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (!leaves[i].best.valid()) continue;
                if (pick < 0 || leaves[i].best.gain > leaves[pick].best.gain) pick = static_cast<int>(i);
            }
            if (pick < 0) break;

            GrowingLeaf parent = std::move(leaves[pick]);
            const int f = parent.best.feature;
            const double thr = parent.best.threshold;
            GrowingLeaf left, right;
            left.sorted.resize(d);
            right.sorted.resize(d);
            for (int r : parent.sorted[0]) {
                goes_right[r] = x_(r, f) > thr ? 1 : 0;
                if (goes_right[r]) {
                    right.grad_sum += grad_[r];
                    right.hess_sum += hess_[r];
                } else {
                    left.grad_sum += grad_[r];
                    left.hess_sum += hess_[r];
                }
            }
            for (std::size_t ff = 0; ff < d; ++ff) {
                for (int r : parent.sorted[ff]) (goes_right[r] ? right : left).sorted[ff].push_back(r);
                std::vector<int>().swap(parent.sorted[ff]);
            }
            left.node = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode::leaf(0.0));
            right.node = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode::leaf(0.0));
            tree.nodes[parent.node] = TreeNode::split(f, thr, left.node, right.node);
            find_best(left);
            find_best(right);
            // Keep creation order stable: left child replaces the parent, right child appended.
            leaves[pick] = std::move(left);
            leaves.push_back(std::move(right));
        }

        leaf_values_out.assign(tree.nodes.size(), 0.0);
        row_leaf_out.assign(n, 0);
        for (auto& leaf : leaves) {
            const double raw = -leaf.grad_sum / std::max(leaf.hess_sum + cfg_.l2, cfg_.hessian_floor);
            const double value = cfg_.learning_rate * raw;
            tree.nodes[leaf.node].value = value;
            leaf_values_out[leaf.node] = value;
            if (d > 0) {
                for (int r : leaf.sorted[0]) row_leaf_out[r] = leaf.node;
            }
        }
        return tree;
    }

private:
    const Eigen::MatrixXd& x_;
    const std::vector<std::vector<int>>& presorted_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    const GbdtConfig& cfg_;
};

}  // namespace

TreeEnsemble train_gbdt(const Eigen::MatrixXd& x, std::span<const int> labels, const GbdtConfig& cfg) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    if (labels.size() != n) throw Error("train_gbdt: label count does not match rows");
    if (cfg.num_trees < 1) throw Error("train_gbdt: num_trees must be >= 1");
    if (cfg.max_leaves < 2) throw Error("train_gbdt: max_leaves must be >= 2");
    if (n == 0) throw Error("train_gbdt: no rows");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw Error("train_gbdt: labels must be binary");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == n) throw Error("degenerate labels");

    const double p0 = static_cast<double>(positives) / static_cast<double>(n);
    TreeEnsemble ens;
    ens.num_features = static_cast<std::size_t>(x.cols());
    ens.base_score = std::log(p0 / (1.0 - p0));

    std::vector<std::vector<int>> presorted(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        auto& order = presorted[static_cast<std::size_t>(f)];
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
    }

    std::vector<double> raw(n, ens.base_score);
    std::vector<double> grad(n), hess(n);
    std::vector<double> leaf_values;
    std::vector<int> row_leaf;
    for (int t = 0; t < cfg.num_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            grad[i] = p - static_cast<double>(labels[i]);
            hess[i] = p * (1.0 - p);
        }
        TreeGrower grower(x, presorted, grad, hess, cfg);
        Tree tree = grower.grow(leaf_values, row_leaf);
        if (x.cols() == 0) {
            for (std::size_t i = 0; i < n; ++i) raw[i] += tree.nodes[0].value;
        } else {
            for (std::size_t i = 0; i < n; ++i) raw[i] += leaf_values[row_leaf[i]];
        }
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

Eigen::MatrixXd numeric_matrix(const Dataset& ds) {
    const auto names = ds.numeric_names();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ds.rows()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& col = ds.numeric(names[j]);
        for (std::size_t i = 0; i < ds.rows(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    return m;
}

}  // namespace pipegrad
