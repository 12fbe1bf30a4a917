#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pipegrad/error.hpp"
#include "pipegrad/eval.hpp"
#include "pipegrad/translator.hpp"
#include "support.hpp"

using namespace pipegrad;

namespace {

TranslationConfig at_level(Level level) {
    TranslationConfig cfg;
    cfg.level = level;
    return cfg;
}

// Three standardized columns -> PCA(2) -> linear, all dense.
Pipeline dense_pipeline() {
    PipelineGraph g;
    g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0", "f1", "f2"}, {}}});
    g.nodes.push_back({"std", {"x"}, StandardizeOp{{0.1, -0.2, 0.0}, {1.5, 0.8, 1.0}}});
    PcaModel pca;
    pca.mean = Eigen::Vector3d(0.05, 0.0, -0.1);
    pca.components.resize(2, 3);
    pca.components << 0.6, 0.8, 0.0, -0.8, 0.6, 0.0;
    g.nodes.push_back({"pca", {"std"}, PcaOp{pca}});
    LinearModel lin;
    lin.weights = Eigen::Vector2d(0.7, -1.3);
    lin.bias = 0.2;
    g.nodes.push_back({"lin", {"pca"}, LinearOp{lin}});
    g.sink = "lin";
    return validate(g);
}

// One tree on f0 with threshold 0.25 and a second split on f1 at -0.5.
Pipeline threshold_pipeline(bool with_sigmoid) {
    Tree t;
    t.nodes = {TreeNode::split(0, 0.25, 1, 2), TreeNode::leaf(-1.0), TreeNode::split(1, -0.5, 3, 4),
               TreeNode::leaf(0.5), TreeNode::leaf(2.0)};
    t.root = 0;
    TreeEnsemble e;
    e.trees.push_back(t);
    e.num_features = 2;
    e.base_score = 0.125;
    PipelineGraph g;
    g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0", "f1"}, {}}});
    g.nodes.push_back({"t", {"x"}, TreeEnsembleOp{e}});
    g.sink = "t";
    if (with_sigmoid) {
        g.nodes.push_back({"p", {"t"}, SigmoidOp{}});
        g.sink = "p";
    }
    return validate(g);
}

}  // namespace

TEST_CASE("auc of perfectly ordered scores is 1") {
    const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
    const std::vector<int> y{0, 0, 1, 1};
    CHECK(auc(s, y) == 1.0);
    const std::vector<int> flipped{1, 1, 0, 0};
    CHECK(auc(s, flipped) == 0.0);
}

TEST_CASE("auc of all-equal scores is 0.5") {
    const std::vector<double> s(7, 3.0);
    const std::vector<int> y{0, 1, 1, 0, 1, 0, 0};
    CHECK(auc(s, y) == 0.5);
}

TEST_CASE("six-point auc with a tie equals the pairwise count") {
    const std::vector<double> s{0.9, 0.4, 0.4, 0.7, 0.2, 0.5};
    const std::vector<int> y{1, 1, 0, 0, 0, 1};
    // Pairs (pos, neg): 0.9 wins 3, 0.4 wins 1 and ties 1, 0.5 wins 2.
    CHECK(testsupport::pairwise_auc(s, y) == 6.5 / 9.0);
    CHECK(auc(s, y) == testsupport::pairwise_auc(s, y));
}

TEST_CASE("auc matches the pairwise oracle on random fixtures with ties") {
    Rng rng(5);
    for (int f = 0; f < 50; ++f) {
        const std::size_t n = 2 + uniform_index(rng, 60);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(uniform_index(rng, 6));  // heavy ties
            y[i] = static_cast<int>(i % 2);
        }
        CHECK(std::abs(auc(s, y) - testsupport::pairwise_auc(s, y)) <= 1e-12);
    }
}

TEST_CASE("auc rejects single-class labels and length mismatch") {
    const std::vector<double> s{0.1, 0.2};
    const std::vector<int> y{1, 1};
    CHECK_THROWS_WITH_AS(auc(s, y), doctest::Contains("auc needs both classes"), Error);
    const std::vector<int> short_y{1};
    CHECK_THROWS_AS(auc(s, short_y), Error);
}

TEST_CASE("auc is invariant under a monotone transform of the scores") {
    const Dataset ds = testsupport::gaussian_dataset(200, 1, 3);
    std::vector<double> s(ds.numeric(0).begin(), ds.numeric(0).end()), t;
    for (double v : s) t.push_back(std::exp(2.0 * v) - 4.0);
    CHECK(auc(s, ds.labels()) == auc(t, ds.labels()));
}

TEST_CASE("log loss and accuracy on logits") {
    const std::vector<double> z{0.0, 2.0, -1.0, 30.0};
    const std::vector<int> y{1, 1, 1, 0};
    const double expect = (std::log(2.0) + std::log1p(std::exp(-2.0)) + std::log1p(std::exp(1.0)) + 30.0 +
                           std::log1p(std::exp(-30.0))) /
                          4.0;
    CHECK(log_loss(z, y) == doctest::Approx(expect).epsilon(1e-14));
    // Logit 0 predicts the negative class.
    CHECK(accuracy(z, y) == 0.25);
    const std::vector<double> huge{-800.0};
    const std::vector<int> one{1};
    CHECK(log_loss(huge, one) == doctest::Approx(800.0));
}

TEST_CASE("scores differ beyond 1e-9 relative with a unit floor") {
    CHECK_FALSE(scores_differ(1.0, 1.0 + 5e-10));
    CHECK(scores_differ(1.0, 1.0 + 2e-9));
    CHECK_FALSE(scores_differ(1e-12, 5e-10));
    CHECK(scores_differ(0.0, 2e-9));
    CHECK_FALSE(scores_differ(1e6, 1e6 + 1e-4));
    CHECK(scores_differ(1e6, 1e6 + 1e-2));
}

TEST_CASE("warm scenario fidelity has no hard mismatches") {
    const Dataset train = make_fixture({1500, 21});
    for (auto kind : {ScenarioKind::s1_onehot, ScenarioKind::s2}) {
        const Pipeline p = testsupport::fit_small(kind, train, 21);
        const NeuralGraph net = translate_pipeline(p, at_level(Level::L4));
        const FidelityReport rep = fidelity_check(p, net, train, 1e-9);
        CHECK(rep.rows_checked == train.rows());
        CHECK(rep.hard_mismatches == 0);
        CHECK(rep.max_hard_abs_deviation <= 1e-9 * 10.0);
        CHECK(rep.min_margin_seen > 0.0);
    }
}

TEST_CASE("rows exactly at a threshold are excluded and reported") {
    const Pipeline p = threshold_pipeline(false);
    const NeuralGraph net = translate_pipeline(p, at_level(Level::L1));
    Dataset ds(testsupport::gaussian_dataset(1, 2, 1).schema());
    ds.append_row(std::vector<double>{1.0, 1.0}, {}, 1);
    ds.append_row(std::vector<double>{0.25, 1.0}, {}, 0);  // on the root threshold
    ds.append_row(std::vector<double>{-2.0, 3.0}, {}, 1);
    ds.append_row(std::vector<double>{3.0, -0.5}, {}, 0);  // on the inner threshold
    const FidelityReport rep = fidelity_check(p, net, ds, 1e-9);
    CHECK(rep.rows_checked == 4);
    CHECK(rep.rows_excluded == 2);
    CHECK(rep.excluded_rows == std::vector<std::size_t>{1, 3});
    CHECK(rep.hard_mismatches == 0);
    CHECK(rep.min_margin_seen == 0.0);
}

TEST_CASE("fidelity counts rows the network gets wrong") {
    const Pipeline p = threshold_pipeline(true);
    NeuralGraph net = translate_pipeline(p, at_level(Level::L2));
    CHECK(net.sink_sigmoid);
    const Dataset ds = testsupport::gaussian_dataset(300, 2, 4);
    CHECK(fidelity_check(p, net, ds, 1e-9).hard_mismatches == 0);

    // Moving the root threshold from 0.25 to 0.75 flips rows with f0 in (0.25, 0.75].
    net.params[net.param_index("t/tree0/b1")].value(0) = -0.75;
    std::size_t expect = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const double f0 = ds.numeric(0)[r];
        if (f0 > 0.25 && f0 <= 0.75) ++expect;
    }
    REQUIRE(expect > 0);
    CHECK(fidelity_check(p, net, ds, 1e-9).hard_mismatches == expect);
}

TEST_CASE("dense-only gradient check is tight") {
    const Dataset ds = testsupport::gaussian_dataset(128, 3, 6);
    TranslationConfig cfg = at_level(Level::L1);
    cfg.train_standardizer = true;
    NeuralGraph net = translate_pipeline(dense_pipeline(), cfg);
    const GradientCheckResult r = gradient_check(net, ds, testsupport::all_rows(ds), 1e-5, 200, 1);
    // scale, shift, pca W and b, linear W and b.
    CHECK(r.coordinates == 3 + 3 + 6 + 2 + 2 + 1);
    CHECK(r.samples.size() == r.coordinates);
    CHECK(r.max_rel_error <= 1e-7);
}

TEST_CASE("gradient check rejects hard mode and empty batches") {
    const Dataset ds = testsupport::gaussian_dataset(8, 3, 6);
    NeuralGraph net = translate_pipeline(dense_pipeline(), at_level(Level::L1));
    CHECK_THROWS_WITH_AS(gradient_check(net, ds, testsupport::all_rows(ds), 1e-5, 10, 1, Mode::hard),
                         doctest::Contains("non-differentiable mode"), Error);
    CHECK_THROWS_AS(gradient_check(net, ds, std::vector<std::size_t>{}, 1e-5, 10, 1), Error);
}

TEST_CASE("parameter counts follow the level masks") {
    Rng rng(17);
    TreeEnsemble e;
    e.num_features = 4;
    for (int k = 0; k < 3; ++k) e.trees.push_back(testsupport::random_tree(5, 4, rng));
    PipelineGraph g;
    g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0", "f1", "f2", "f3"}, {}}});
    g.nodes.push_back({"t", {"x"}, TreeEnsembleOp{e}});
    g.sink = "t";
    const Pipeline p = validate(g);
    // m = 5 leaves, d = 4 inputs per tree.
    const std::size_t m = 5, d = 4;
    const std::size_t l1 = m, l2 = l1 + (m - 1), l3 = l2 + (m - 1) * d, l4 = l3 + m * (m - 1) + m;
    const std::vector<std::pair<Level, std::size_t>> levels{
        {Level::L1, l1}, {Level::L2, l2}, {Level::L3, l3}, {Level::L4, l4}};
    for (const auto& [level, per_tree] : levels) {
        const NeuralGraph net = translate_pipeline(p, at_level(level));
        const ParamCount trainable = count_parameters(net, true);
        const ParamCount all = count_parameters(net, false);
        CHECK(trainable.total_trainable == 3 * per_tree);
        CHECK(all.total_all == 3 * l4);
        CHECK(all.total_trainable == trainable.total_trainable);
        std::size_t sum = 0;
        for (const auto& entry : trainable.per_layer) sum += entry.count;
        CHECK(sum == trainable.total_trainable);
        sum = 0;
        for (const auto& entry : all.per_layer) sum += entry.count;
        CHECK(sum == all.total_all);
    }
}

TEST_CASE("report json keys are stable") {
    FidelityReport rep;
    rep.rows_checked = 3;
    rep.min_margin_seen = std::numeric_limits<double>::infinity();
    const auto j = to_json(rep);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"rows_checked", "hard_mismatches", "rows_excluded", "excluded_rows",
                                           "max_hard_abs_deviation", "max_soft_abs_deviation", "min_margin_seen"});
    CHECK(j["min_margin_seen"].is_null());

    const NeuralGraph net = translate_pipeline(dense_pipeline(), at_level(Level::L1));
    const auto c = to_json(count_parameters(net));
    CHECK(c.contains("total_trainable"));
    CHECK(c.contains("total_all"));
    CHECK(c["per_layer"].is_array());
    CHECK(c["per_layer"][0].contains("layer"));
    CHECK(c["per_layer"][0].contains("count"));
}
