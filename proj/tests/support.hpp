#pragma once

// Fixtures and independent oracles shared by the test binaries. Oracles here
// deliberately avoid the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pipegrad/data.hpp"
#include "pipegrad/pipeline.hpp"
#include "pipegrad/random.hpp"
#include "pipegrad/scenarios.hpp"
#include "pipegrad/synthetic.hpp"
#include "pipegrad/tree.hpp"

namespace testsupport {

using namespace pipegrad;

// O(n^2) pairwise AUC: P(score_pos > score_neg) + 0.5 P(equal).
inline double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1.0;
                if (s[i] > s[j])
                    wins += 1.0;
                else if (s[i] == s[j])
                    wins += 0.5;
            }
    return wins / pairs;
}

inline double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Example tree of the form n1 -> (n2 -> (l1, n3 -> (l2, l3)), n4 -> (l4, l5)),
// decision n_k on feature k-1 at threshold 0, leaf values 10..50.
inline Tree figure_tree() {
    Tree t;
    t.nodes = {
        TreeNode::split(0, 0.0, 1, 2),  // 0: n1
        TreeNode::split(1, 0.0, 3, 4),  // 1: n2
        TreeNode::split(3, 0.0, 7, 8),  // 2: n4
        TreeNode::leaf(10.0),           // 3: l1
        TreeNode::split(2, 0.0, 5, 6),  // 4: n3
        TreeNode::leaf(20.0),           // 5: l2
        TreeNode::leaf(30.0),           // 6: l3
        TreeNode::leaf(40.0),           // 7: l4
        TreeNode::leaf(50.0),           // 8: l5
    };
    t.root = 0;
    return t;
}

// A tree with exactly `leaves` leaves grown by repeatedly splitting the
// shallowest leaf; features and thresholds drawn from rng.
inline Tree random_tree(std::size_t leaves, std::size_t num_features, Rng& rng) {
    Tree t;
    t.nodes.push_back(TreeNode::leaf(uniform(rng, -1, 1)));
    std::vector<int> frontier{0};
    while (t.leaf_count() < leaves) {
        const int id = frontier.front();
        frontier.erase(frontier.begin());
        const int l = static_cast<int>(t.nodes.size());
        t.nodes.push_back(TreeNode::leaf(uniform(rng, -1, 1)));
        t.nodes.push_back(TreeNode::leaf(uniform(rng, -1, 1)));
        t.nodes[static_cast<std::size_t>(id)] =
            TreeNode::split(static_cast<int>(uniform_index(rng, num_features)), uniform(rng, -1.5, 1.5), l, l + 1);
        frontier.push_back(l);
        frontier.push_back(l + 1);
    }
    return t;
}

inline TreeEnsemble random_ensemble(std::size_t trees, std::size_t leaves, std::size_t num_features,
                                    std::uint64_t seed) {
    Rng rng(seed);
    TreeEnsemble e;
    e.num_features = num_features;
    e.base_score = uniform(rng, -0.5, 0.5);
    for (std::size_t k = 0; k < trees; ++k) e.trees.push_back(random_tree(leaves, num_features, rng));
    return e;
}

// Dataset of N(0,1) numeric columns f0..f{d-1} with random labels.
inline Dataset gaussian_dataset(std::size_t rows, std::size_t d, std::uint64_t seed) {
    std::vector<ColumnSchema> schema;
    for (std::size_t j = 0; j < d; ++j) schema.push_back({"f" + std::to_string(j), ColumnKind::numeric});
    Dataset ds(schema);
    Rng rng(seed);
    std::vector<double> row(d);
    for (std::size_t r = 0; r < rows; ++r) {
        for (double& v : row) v = normal(rng);
        ds.append_row(row, std::span<const std::string>{}, uniform01(rng) < 0.5 ? 1 : 0);
    }
    return ds;
}

// Small trained pipelines on the bundled fixture.
inline ScenarioConfig small_scenario(ScenarioKind kind, std::uint64_t seed, int trees = 10, int leaves = 8) {
    ScenarioConfig sc;
    sc.kind = kind;
    sc.gbdt.num_trees = trees;
    sc.gbdt.max_leaves = leaves;
    sc.gbdt.seed = seed;
    sc.hash_bits = 6;
    sc.lda.iterations = 40;
    sc.lda.seed = seed;
    sc.pca_k = 6;
    sc.sdca.epochs = 10;
    sc.sdca.seed = seed;
    return sc;
}

inline Pipeline fit_small(ScenarioKind kind, const Dataset& train, std::uint64_t seed, int trees = 10,
                          int leaves = 8) {
    return fit_scenario(train, small_scenario(kind, seed, trees, leaves));
}

inline std::vector<std::size_t> all_rows(const Dataset& ds) {
    std::vector<std::size_t> r(ds.rows());
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
}

inline std::vector<std::size_t> first_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("pipegrad_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testsupport
