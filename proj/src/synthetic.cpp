#include "pipegrad/synthetic.hpp"

#include <array>
#include <cmath>
#include <string>

#include "pipegrad/detail/math.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

namespace {

template <std::size_t N>
std::size_t draw_category(Rng& rng, const std::array<double, N>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < N; ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return N - 1;
}

std::vector<ColumnSchema> fixture_columns() {
    return {{"x0", ColumnKind::numeric, MissingPolicy::fill_zero},
            {"x1", ColumnKind::numeric, MissingPolicy::fill_zero},
            {"c0", ColumnKind::categorical, MissingPolicy::fill_zero},
            {"c1", ColumnKind::categorical, MissingPolicy::fill_zero}};
}

}  // namespace

SchemaFile fixture_schema() { return SchemaFile{fixture_columns(), "label"}; }

Dataset make_fixture(const FixtureConfig& cfg) {
    constexpr std::array<double, 8> c0_weights{0.25, 0.18, 0.15, 0.12, 0.1, 0.08, 0.07, 0.05};
    constexpr std::array<double, 8> c0_effect{1.2, -0.8, 0.5, -1.5, 0.9, 0.0, -0.4, 1.6};
    constexpr std::array<double, 6> c1_weights{0.3, 0.2, 0.2, 0.15, 0.1, 0.05};

    Rng rng(cfg.seed);
    Dataset ds(fixture_columns());
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        const double x0 = 5.0 + 2.0 * normal(rng);
        const double x1 = uniform(rng, -3.0, 3.0);
        const std::size_t c0 = draw_category(rng, c0_weights);
        const std::size_t c1 = draw_category(rng, c1_weights);

        double tree;
        if (x0 > 6.0)
            tree = x1 > 0.5 ? 1.5 : -0.5;
        else
            tree = (c1 == 0 || c1 == 2) ? 1.0 : -1.2;
        const double logit = tree + 0.6 * c0_effect[c0] + 0.8 * std::tanh(x1 + 0.5 * (x0 - 5.0));
        const int label = uniform01(rng) < detail::sigmoid(1.5 * logit) ? 1 : 0;

        const std::array<double, 2> num{x0, x1};
        const std::array<std::string, 2> cat{"a" + std::to_string(c0), "b" + std::to_string(c1)};
        ds.append_row(num, cat, label);
    }
    return ds;
}

PlantedTreeTask make_planted_tree_task(std::size_t rows, std::uint64_t seed) {
    PlantedTreeTask task;
    // Complete depth-3 tree; every bottom split separates its two leaves.
    auto& n = task.truth.nodes;
    n = {
        TreeNode::split(0, 0.2, 1, 2),     // 0
        TreeNode::split(1, -0.4, 3, 4),    // 1
        TreeNode::split(2, 0.5, 5, 6),     // 2
        TreeNode::split(3, 0.1, 7, 8),     // 3
        TreeNode::split(2, -0.6, 9, 10),   // 4
        TreeNode::split(1, 0.8, 11, 12),   // 5
        TreeNode::split(3, -0.3, 13, 14),  // 6
        TreeNode::leaf(0), TreeNode::leaf(1), TreeNode::leaf(1), TreeNode::leaf(0),
        TreeNode::leaf(1), TreeNode::leaf(0), TreeNode::leaf(0), TreeNode::leaf(1),
    };
    task.truth.root = 0;

    std::vector<ColumnSchema> schema;
    for (int j = 0; j < 4; ++j)
        schema.push_back({"z" + std::to_string(j), ColumnKind::numeric, MissingPolicy::fill_zero});
    task.data = Dataset(schema);
    Rng rng(seed);
    std::array<double, 4> z{};
    for (std::size_t r = 0; r < rows; ++r) {
        for (double& v : z) v = normal(rng);
        const int label = predict_tree(task.truth, z) > 0.5 ? 1 : 0;
        task.data.append_row(z, std::span<const std::string>{}, label);
    }
    return task;
}

Dataset with_label_noise(const Dataset& ds, double rate, std::uint64_t seed) {
    Dataset out = ds;
    Rng rng(seed);
    for (int& y : out.mutable_labels())
        if (uniform01(rng) < rate) y = 1 - y;
    return out;
}

}  // namespace pipegrad
