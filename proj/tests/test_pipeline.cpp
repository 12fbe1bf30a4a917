#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "pipegrad/error.hpp"
#include "pipegrad/pipeline.hpp"
#include "pipegrad/pipeline_json.hpp"
#include "support.hpp"

using namespace pipegrad;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

LinearModel linear_of(std::vector<double> w, double b) {
    LinearModel m;
    m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.bias = b;
    return m;
}

template <class T>
const T& payload(const Pipeline& p, std::string_view id) {
    return std::get<T>(p.graph().node(id).payload);
}

// Independent walker: left-to-right leaf position reached by x.
std::size_t walk_leaf_position(const Tree& t, const Eigen::VectorXd& x) {
    // Leaves numbered by an in-order traversal.
    std::vector<int> leaves;
    std::function<void(int)> visit = [&](int n) {
        const TreeNode& node = t.nodes[static_cast<std::size_t>(n)];
        if (node.is_leaf) {
            leaves.push_back(n);
            return;
        }
        visit(node.left);
        visit(node.right);
    };
    visit(t.root);
    int n = t.root;
    while (!t.nodes[static_cast<std::size_t>(n)].is_leaf) {
        const TreeNode& node = t.nodes[static_cast<std::size_t>(n)];
        n = x(node.feature) > node.threshold ? node.right : node.left;
    }
    return static_cast<std::size_t>(std::find(leaves.begin(), leaves.end(), n) - leaves.begin());
}

}  // namespace

TEST_CASE("single linear node validates") {
    PipelineGraph g;
    g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0", "f1"}, {}}});
    g.nodes.push_back({"lin", {"x"}, LinearOp{linear_of({1.0, -2.0}, 0.5)}});
    g.sink = "lin";
    const Pipeline p = validate(g);
    CHECK(p.topo_order().size() == 2);
    CHECK(p.output_dims()[p.index_of("lin")] == 1);
    const Dataset ds = testsupport::gaussian_dataset(5, 2, 1);
    for (std::size_t r = 0; r < 5; ++r)
        CHECK(pipeline_predict(p, ds, r) ==
              doctest::Approx(ds.numeric(0)[r] - 2.0 * ds.numeric(1)[r] + 0.5).epsilon(1e-14));
}

TEST_CASE("standardize then linear is w.x + b at identity standardizer") {
    PipelineGraph g;
    g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0", "f1", "f2"}, {}}});
    g.nodes.push_back({"std", {"x"}, StandardizeOp{{0, 0, 0}, {1, 1, 1}}});
    g.nodes.push_back({"lin", {"std"}, LinearOp{linear_of({0.3, 0.2, -0.7}, 1.25)}});
    g.sink = "lin";
    const Pipeline p = validate(g);
    const Dataset ds = testsupport::gaussian_dataset(10, 3, 2);
    for (std::size_t r = 0; r < 10; ++r) {
        const double want = 0.3 * ds.numeric(0)[r] + 0.2 * ds.numeric(1)[r] - 0.7 * ds.numeric(2)[r] + 1.25;
        CHECK(pipeline_predict(p, ds, r) == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("validation errors") {
    SUBCASE("self loop") {
        PipelineGraph g;
        g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0"}, {}}});
        g.nodes.push_back({"s", {"s"}, SigmoidOp{}});
        g.sink = "s";
        CHECK(contains(error_of([&] { validate(g); }), "cycle through"));
    }
    SUBCASE("concat of 3 and 5 into 7 weights names 8 vs 7") {
        PipelineGraph g;
        g.nodes.push_back({"a", {}, ColumnSelectOp{{"f0", "f1", "f2"}, {}}});
        g.nodes.push_back({"b", {}, ColumnSelectOp{{"f0", "f1", "f2", "f3", "f4"}, {}}});
        g.nodes.push_back({"cat", {"a", "b"}, ConcatOp{}});
        g.nodes.push_back({"lin", {"cat"}, LinearOp{linear_of(std::vector<double>(7, 1.0), 0.0)}});
        g.sink = "lin";
        const std::string msg = error_of([&] { validate(g); });
        CHECK(contains(msg, "'cat'"));
        CHECK(contains(msg, "'lin'"));
        CHECK(contains(msg, "8"));
        CHECK(contains(msg, "7"));
    }
    SUBCASE("concat arity") {
        PipelineGraph g;
        g.nodes.push_back({"a", {}, ColumnSelectOp{{"f0"}, {}}});
        g.nodes.push_back({"cat", {"a"}, ConcatOp{}});
        g.nodes.push_back({"lin", {"cat"}, LinearOp{linear_of({1.0}, 0.0)}});
        g.sink = "lin";
        CHECK(contains(error_of([&] { validate(g); }), "at least 2 inputs"));
    }
    SUBCASE("unknown input and non-scalar sink") {
        PipelineGraph g;
        g.nodes.push_back({"a", {"ghost"}, SigmoidOp{}});
        g.sink = "a";
        CHECK(contains(error_of([&] { validate(g); }), "ghost"));
        PipelineGraph h;
        h.nodes.push_back({"a", {}, ColumnSelectOp{{"f0", "f1"}, {}}});
        h.sink = "a";
        CHECK(contains(error_of([&] { validate(h); }), "must output one value"));
    }
    SUBCASE("leaf_onehot needs a tree ensemble") {
        PipelineGraph g;
        g.nodes.push_back({"a", {}, ColumnSelectOp{{"f0"}, {}}});
        g.nodes.push_back({"l", {"a"}, LeafOneHotOp{}});
        g.nodes.push_back({"lin", {"l"}, LinearOp{linear_of({1.0}, 0.0)}});
        g.sink = "lin";
        CHECK(contains(error_of([&] { validate(g); }), "must consume a tree_ensemble"));
    }
}

TEST_CASE("scenario-1 sink equals predict_ensemble on the encoded row") {
    const Dataset all = make_fixture({600, 3});
    const Pipeline p = testsupport::fit_small(ScenarioKind::s1_onehot, all, 3);
    const auto& ens = payload<TreeEnsembleOp>(p, node_ids::gbdt).ensemble;
    const std::string feature_node = p.graph().node(node_ids::gbdt).inputs[0];
    const Eigen::MatrixXd encoded = node_output_matrix(p, all, feature_node);
    for (std::size_t r = 0; r < 100; ++r) {
        const Eigen::VectorXd x = encoded.row(static_cast<Eigen::Index>(r)).transpose();
        CHECK(pipeline_predict(p, all, r) == predict_ensemble(ens, {x.data(), static_cast<std::size_t>(x.size())}));
    }
}

TEST_CASE("scenario-2 matches hand composition on five rows") {
    const Dataset train = make_fixture({800, 5});
    const Pipeline p = testsupport::fit_small(ScenarioKind::s2, train, 5, 6, 5);
    const auto& st = payload<StandardizeOp>(p, node_ids::standardize);
    const auto& pca = payload<PcaOp>(p, node_ids::pca).model;
    const auto& ens = payload<TreeEnsembleOp>(p, node_ids::gbdt).ensemble;
    const auto& lin = payload<LinearOp>(p, node_ids::linear).model;
    const auto& c0 = payload<OneHotOp>(p, "enc_c0").vocab;
    const auto& c1 = payload<OneHotOp>(p, "enc_c1").vocab;
    const bool has_select = p.graph().has_node(node_ids::count_select);

    for (std::size_t r = 0; r < 5; ++r) {
        // (1) features: standardized numeric then one-hot blocks.
        std::vector<double> x;
        x.push_back((train.numeric("x0")[r] - st.mean[0]) / st.scale[0]);
        x.push_back((train.numeric("x1")[r] - st.mean[1]) / st.scale[1]);
        for (const auto& v : {std::pair{&c0, "c0"}, std::pair{&c1, "c1"}})
            for (const auto& cat : v.first->categories()) x.push_back(cat == train.categorical(v.second)[r] ? 1.0 : 0.0);
        if (has_select) {
            std::vector<double> kept;
            for (std::size_t j : payload<ColumnSelectOp>(p, node_ids::count_select).indices) kept.push_back(x[j]);
            x = kept;
        }
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        // (2) principal components.
        const Eigen::VectorXd z = pca.components * (xv - pca.mean);
        // (3) leaf indicators.
        std::vector<double> stacked;
        for (const auto& t : ens.trees) {
            std::vector<double> block(t.leaf_count(), 0.0);
            block[walk_leaf_position(t, z)] = 1.0;
            stacked.insert(stacked.end(), block.begin(), block.end());
        }
        // (4) concat with x, (5) linear.
        stacked.insert(stacked.end(), x.begin(), x.end());
        double want = lin.bias;
        for (std::size_t j = 0; j < stacked.size(); ++j) want += lin.weights(static_cast<Eigen::Index>(j)) * stacked[j];
        CHECK(pipeline_predict(p, train, r) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("unseen categories encode as zeros and uniform rows") {
    const Dataset train = make_fixture({500, 9});
    Dataset probe(train.schema());
    const std::vector<double> num{5.0, 0.0};
    const std::vector<std::string> cat{"never", "seen"};
    probe.append_row(num, cat, 0);
    const Pipeline onehot = testsupport::fit_small(ScenarioKind::s1_onehot, train, 1);
    const auto outs = pipeline_execute(onehot, probe, 0);
    const auto& enc = outs[onehot.index_of("enc_c0")];
    CHECK(std::all_of(enc.begin(), enc.end(), [](double v) { return v == 0.0; }));
    const Pipeline lda = testsupport::fit_small(ScenarioKind::s1_lda, train, 1);
    const auto louts = pipeline_execute(lda, probe, 0);
    const auto& row = louts[lda.index_of("enc_c0")];
    for (double v : row) CHECK(v == doctest::Approx(1.0 / static_cast<double>(row.size())));
}

TEST_CASE("pipeline_predict is row-order independent") {
    const Dataset ds = make_fixture({300, 2});
    const Pipeline p = testsupport::fit_small(ScenarioKind::s1_hash, ds, 2);
    const auto fwd = pipeline_predict_all(p, ds);
    std::vector<std::size_t> rev(ds.rows());
    for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
    const auto back = pipeline_predict_all(p, ds.subset(rev));
    for (std::size_t i = 0; i < rev.size(); ++i) CHECK(back[i] == fwd[rev[i]]);
}

TEST_CASE("serialization round-trip is exact") {
    const Dataset ds = make_fixture({400, 6});
    for (ScenarioKind kind : {ScenarioKind::s1_onehot, ScenarioKind::s1_hash, ScenarioKind::s1_lda, ScenarioKind::s2}) {
        const Pipeline p = testsupport::fit_small(kind, ds, 6);
        const auto doc = serialize(p);
        CHECK(doc["version"] == std::string(kPipelineVersion));
        const Pipeline q = deserialize_pipeline(nlohmann::ordered_json::parse(doc.dump()));
        CHECK(serialize(q) == doc);
        const auto a = pipeline_predict_all(p, ds.subset(testsupport::first_rows(100)));
        const auto b = pipeline_predict_all(q, ds.subset(testsupport::first_rows(100)));
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
    }
}

TEST_CASE("thresholds survive the file round-trip bit-exactly") {
    TreeEnsemble e = testsupport::random_ensemble(3, 4, 2, 1);
    e.trees[0].nodes[static_cast<std::size_t>(e.trees[0].root)].threshold = 0.1;
    PipelineGraph g;
    g.nodes.push_back({"x", {}, ColumnSelectOp{{"f0", "f1"}, {}}});
    g.nodes.push_back({"t", {"x"}, TreeEnsembleOp{e}});
    g.sink = "t";
    const auto dir = testsupport::scratch_dir("pipeline_rt");
    save_pipeline(dir / "p.json", validate(g));
    const Pipeline back = load_pipeline(dir / "p.json");
    const auto& t = payload<TreeEnsembleOp>(back, "t").ensemble;
    CHECK(t.trees[0].nodes[static_cast<std::size_t>(t.trees[0].root)].threshold == 0.1);
    for (std::size_t k = 0; k < e.trees.size(); ++k)
        for (std::size_t n = 0; n < e.trees[k].nodes.size(); ++n) {
            CHECK(t.trees[k].nodes[n].threshold == e.trees[k].nodes[n].threshold);
            CHECK(t.trees[k].nodes[n].value == e.trees[k].nodes[n].value);
        }
    CHECK(t.base_score == e.base_score);
}

TEST_CASE("deserialization errors name the problem") {
    const Dataset ds = make_fixture({200, 1});
    auto doc = serialize(testsupport::fit_small(ScenarioKind::s1_onehot, ds, 1));
    auto missing = doc;
    missing.erase("version");
    CHECK(contains(error_of([&] { deserialize_pipeline(missing); }), "version"));
    auto wrong = doc;
    wrong["version"] = "pipegrad.pipeline/99";
    CHECK(contains(error_of([&] { deserialize_pipeline(wrong); }), "pipegrad.pipeline/99"));
    auto bad_kind = doc;
    bad_kind["nodes"][0]["kind"] = "quantum";
    CHECK(contains(error_of([&] { deserialize_pipeline(bad_kind); }), "quantum"));
    CHECK_THROWS_AS(load_pipeline("/nonexistent/p.json"), ConfigError);
}
