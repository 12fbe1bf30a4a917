#include "pipegrad/translator.hpp"

#include <cmath>
#include <functional>
#include <set>

#include "pipegrad/detail/overloaded.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

using detail::overloaded;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Level level) { return "L" + std::to_string(static_cast<int>(level)); }

std::optional<Level> level_from_string(std::string_view name) {
    if (name == "L1") return Level::L1;
    if (name == "L2") return Level::L2;
    if (name == "L3") return Level::L3;
    if (name == "L4") return Level::L4;
    return std::nullopt;
}

void TranslationConfig::check() const {
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw ConfigError("sharpness gamma1/gamma2 must be positive");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must lie in [0, 1)");
}

TreeMlpBlock translate_tree(const Tree& tree, std::size_t num_features, const TranslationConfig& cfg) {
    tree.validate(num_features);
    TreeMlpBlock b;
    b.layout = layout(tree);
    const auto internal = static_cast<Index>(b.layout.internal_nodes.size());
    const auto leaves = static_cast<Index>(b.layout.leaves.size());
    const auto d = static_cast<Index>(num_features);

    b.w1 = MatrixXd::Zero(internal, d);
    b.b1 = VectorXd::Zero(internal);
    for (Index k = 0; k < internal; ++k) {
        const auto& node = tree.nodes[static_cast<std::size_t>(b.layout.internal_nodes[static_cast<std::size_t>(k)])];
        b.w1(k, node.feature) = 1.0;
        b.b1(k) = -node.threshold;
    }

    b.w2 = MatrixXd::Zero(leaves, internal);
    b.b2 = VectorXd::Zero(leaves);
    b.w3 = VectorXd::Zero(leaves);
    // Walk every root-to-leaf path, recording the literal each decision contributes.
    std::vector<std::pair<int, bool>> path;  // (internal position, went right)
    std::function<void(int)> walk = [&](int id) {
        const auto& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.is_leaf) {
            const Index l = b.layout.leaf_pos[static_cast<std::size_t>(id)];
            int negated = 0;
            for (auto [pos, right] : path) {
                b.w2(l, pos) = right ? 1.0 : -1.0;
                if (!right) ++negated;
            }
            b.b2(l) = negated - static_cast<double>(path.size()) + 0.5;
            b.w3(l) = node.value;
            return;
        }
        const int pos = b.layout.internal_pos[static_cast<std::size_t>(id)];
        path.emplace_back(pos, false);
        walk(node.left);
        path.back().second = true;
        walk(node.right);
        path.pop_back();
    };
    walk(tree.root);

    b.trainable.w3 = true;
    b.trainable.b1 = cfg.level >= Level::L2;
    b.trainable.w1 = cfg.level >= Level::L3;
    b.trainable.w2 = b.trainable.b2 = cfg.level >= Level::L4;
    return b;
}

namespace {

// Lowered output of one pipeline node. When `map` is set the layer's output
// is a compressed stand-in: original ≈ output * map.
struct Lowered {
    std::size_t layer = 0;
    std::optional<MatrixXd> map;
};

std::size_t add_tree_layer(NeuralGraph& net, const std::string& id, const Lowered& input, const TreeEnsemble& ens,
                           const TranslationConfig& cfg, bool leaf_output) {
    TreeEnsembleLayer op;
    op.base_score = ens.base_score;
    op.gamma1 = cfg.gamma1;
    op.gamma2 = cfg.gamma2;
    op.dropout = cfg.dropout_p;
    op.leaf_output = leaf_output;
    const std::size_t d_in = net.layers[input.layer].out_dim;
    std::size_t total_leaves = 0;
    for (std::size_t k = 0; k < ens.trees.size(); ++k) {
        TreeMlpBlock blk = translate_tree(ens.trees[k], ens.num_features, cfg);
        if (input.map) blk.w1 = blk.w1 * input.map->transpose();
        if (static_cast<std::size_t>(blk.w1.cols()) != d_in)
            throw Error("tree ensemble '" + id + "' expects " + std::to_string(blk.w1.cols()) + " inputs, got " +
                        std::to_string(d_in));
        const std::string prefix = id + "/tree" + std::to_string(k) + "/";
        TreeBlock tb;
        tb.internal = blk.layout.internal_nodes.size();
        tb.leaves = blk.layout.leaves.size();
        if (tb.internal > 0) {
            tb.w1 = net.add_param(prefix + "W1", blk.w1, blk.trainable.w1, d_in);
            tb.b1 = net.add_param(prefix + "b1", blk.b1, blk.trainable.b1, d_in);
            tb.w2 = net.add_param(prefix + "W2", blk.w2, blk.trainable.w2, tb.internal);
            tb.b2 = net.add_param(prefix + "b2", blk.b2, blk.trainable.b2, tb.internal);
        }
        if (!leaf_output) tb.w3 = net.add_param(prefix + "w3", blk.w3, blk.trainable.w3, tb.leaves);
        total_leaves += tb.leaves;
        op.trees.push_back(tb);
    }
    Layer layer{id, {input.layer}, leaf_output ? total_leaves : 1, std::move(op)};
    return net.add_layer(std::move(layer));
}

std::size_t add_dense_layer(NeuralGraph& net, const std::string& id, const Lowered& input, DenseInit init,
                            bool trainable) {
    if (input.map) init.weight = init.weight * input.map->transpose();
    const std::size_t in = net.layers[input.layer].out_dim;
    if (static_cast<std::size_t>(init.weight.cols()) != in)
        throw Error("dense layer '" + id + "' expects " + std::to_string(init.weight.cols()) + " inputs, got " +
                    std::to_string(in));
    const auto out = static_cast<std::size_t>(init.weight.rows());
    DenseLayer op;
    op.weight = net.add_param(id + "/W", std::move(init.weight), trainable, in);
    op.bias = net.add_param(id + "/b", MatrixXd(init.bias), trainable, in);
    return net.add_layer(Layer{id, {input.layer}, out, op});
}

void require_plain(const Lowered& in, const std::string& id) {
    if (in.map)
        throw ConfigError("node '" + id + "' cannot consume a compressed hash embedding; use embedding_dim 0");
}

void add_frozen_input(NeuralGraph& net, const std::string& column, ColumnKind kind) {
    for (const auto& c : net.frozen_inputs)
        if (c.name == column) return;
    net.frozen_inputs.push_back(ColumnSchema{column, kind, MissingPolicy::fill_zero});
}

}  // namespace

NeuralGraph translate_ensemble(const TreeEnsemble& ens, const TranslationConfig& cfg) {
    cfg.check();
    if (ens.trees.empty()) throw Error("cannot translate an empty ensemble");
    ens.validate();
    NeuralGraph net;
    NumericInputLayer in;
    for (std::size_t j = 0; j < ens.num_features; ++j) {
        in.columns.push_back("f" + std::to_string(j));
        add_frozen_input(net, in.columns.back(), ColumnKind::numeric);
    }
    const std::size_t input = net.add_layer(Layer{"input", {}, ens.num_features, in});
    net.output = add_tree_layer(net, "trees", Lowered{input, std::nullopt}, ens, cfg, false);
    if (cfg.start == Start::cold) init_cold(net, cfg.cold_seed);
    net.check();
    return net;
}

MatrixXd onehot_table(const OneHotVocab& vocab) {
    const auto v = static_cast<Index>(vocab.cardinality());
    return MatrixXd::Identity(v, v);
}

MatrixXd hash_table(int bits, std::size_t dim, std::uint64_t seed) {
    if (bits < 1 || bits > 30) throw Error("hash bits must lie in [1, 30]");
    const Index rows = Index{1} << bits;
    const auto cols = static_cast<Index>(dim == 0 ? static_cast<std::size_t>(rows) : dim);
    if (cols == rows) return MatrixXd::Identity(rows, rows);
    Rng rng(seed);
    const double a = 1.0 / std::sqrt(static_cast<double>(cols));
    MatrixXd t(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) t(i, j) = uniform(rng, -a, a);
    return t;
}

MatrixXd lda_table(const LdaModel& model) { return model.doc_topic(); }

DenseInit translate_linear(const LinearModel& m) {
    return DenseInit{m.weights.transpose(), VectorXd::Constant(1, m.bias)};
}

DenseInit translate_pca(const PcaModel& m) { return DenseInit{m.components, -(m.components * m.mean)}; }

DenseInit translate_standardizer(const StandardizeOp& op) {
    const auto n = static_cast<Index>(op.mean.size());
    DenseInit init{MatrixXd(n, 1), VectorXd(n)};
    for (Index j = 0; j < n; ++j) {
        const double s = op.scale[static_cast<std::size_t>(j)];
        init.weight(j, 0) = 1.0 / s;
        init.bias(j) = -op.mean[static_cast<std::size_t>(j)] / s;
    }
    return init;
}

NeuralGraph translate_pipeline(const Pipeline& pipeline, const TranslationConfig& cfg) {
    cfg.check();
    NeuralGraph net;
    const auto& nodes = pipeline.graph().nodes;
    std::vector<std::optional<Lowered>> memo(nodes.size());

    std::function<Lowered(std::size_t)> lower = [&](std::size_t i) -> Lowered {
        if (memo[i]) return *memo[i];
        const OperatorNode& node = nodes[i];
        const auto& ins = pipeline.input_indices()[i];
        const std::size_t width = pipeline.output_dims()[i];
        auto plain = [](std::size_t layer) { return Lowered{layer, std::nullopt}; };

        Lowered res = std::visit(
            overloaded{
                [&](const ColumnSelectOp& op) {
                    if (op.is_entry()) {
                        for (const auto& c : op.columns) add_frozen_input(net, c, ColumnKind::numeric);
                        return plain(net.add_layer(Layer{node.id, {}, width, NumericInputLayer{op.columns}}));
                    }
                    const Lowered in = lower(ins[0]);
                    require_plain(in, node.id);
                    return plain(net.add_layer(Layer{node.id, {in.layer}, width, SelectLayer{op.indices}}));
                },
                [&](const OneHotOp& op) {
                    add_frozen_input(net, op.column, ColumnKind::categorical);
                    const auto v = static_cast<Index>(op.vocab.cardinality());
                    const std::size_t t = net.add_param(node.id + "/table", onehot_table(op.vocab), cfg.train_encoders, 1);
                    EmbeddingLayer e(op.column, op.vocab.categories(), t, Eigen::RowVectorXd::Zero(v));
                    return plain(net.add_layer(Layer{node.id, {}, width, std::move(e)}));
                },
                [&](const HashEncodeOp& op) {
                    add_frozen_input(net, op.column, ColumnKind::categorical);
                    const std::size_t slots = std::size_t{1} << op.bits;
                    const std::size_t dim = cfg.embedding_dim == 0 ? slots : cfg.embedding_dim;
                    MatrixXd table = hash_table(op.bits, dim, cfg.cold_seed ^ fnv1a64(node.id));
                    std::optional<MatrixXd> map;
                    if (dim != slots)
                        map = table.completeOrthogonalDecomposition().pseudoInverse();
                    const std::size_t t = net.add_param(node.id + "/table", std::move(table), cfg.train_encoders, 1);
                    const std::size_t layer = net.add_layer(Layer{node.id, {}, dim, EmbeddingLayer(op.column, op.bits, t)});
                    return Lowered{layer, std::move(map)};
                },
                [&](const LdaOp& op) {
                    add_frozen_input(net, op.column, ColumnKind::categorical);
                    const int k = op.model.topics();
                    const std::size_t t = net.add_param(node.id + "/table", lda_table(op.model), cfg.train_encoders, 1);
                    EmbeddingLayer e(op.column, op.model.vocabulary(), t,
                                     Eigen::RowVectorXd::Constant(k, 1.0 / static_cast<double>(k)));
                    return plain(net.add_layer(Layer{node.id, {}, width, std::move(e)}));
                },
                [&](const StandardizeOp& op) {
                    const Lowered in = lower(ins[0]);
                    require_plain(in, node.id);
                    DenseInit init = translate_standardizer(op);
                    AffineLayer a;
                    a.scale = net.add_param(node.id + "/scale", std::move(init.weight), cfg.train_standardizer, 1);
                    a.shift = net.add_param(node.id + "/shift", MatrixXd(init.bias), cfg.train_standardizer, 1);
                    return plain(net.add_layer(Layer{node.id, {in.layer}, width, a}));
                },
                [&](const PcaOp& op) {
                    return plain(add_dense_layer(net, node.id, lower(ins[0]), translate_pca(op.model), cfg.train_dense));
                },
                [&](const TreeEnsembleOp& op) {
                    return plain(add_tree_layer(net, node.id, lower(ins[0]), op.ensemble, cfg, false));
                },
                [&](const LinearOp& op) {
                    return plain(
                        add_dense_layer(net, node.id, lower(ins[0]), translate_linear(op.model), cfg.train_dense));
                },
                [&](const LeafOneHotOp&) {
                    // Leaf activations of the source ensemble, computed from the
                    // ensemble's own input.
                    const std::size_t src = ins[0];
                    const auto& ens = std::get<TreeEnsembleOp>(nodes[src].payload).ensemble;
                    const Lowered in = lower(pipeline.input_indices()[src][0]);
                    return plain(add_tree_layer(net, node.id, in, ens, cfg, true));
                },
                [&](const ConcatOp&) {
                    std::vector<Lowered> parts;
                    std::vector<std::size_t> layers;
                    bool mapped = false;
                    for (std::size_t in : ins) {
                        parts.push_back(lower(in));
                        layers.push_back(parts.back().layer);
                        mapped = mapped || parts.back().map.has_value();
                    }
                    std::size_t new_width = 0;
                    for (const auto& p : parts) new_width += net.layers[p.layer].out_dim;
                    const std::size_t layer = net.add_layer(Layer{node.id, layers, new_width, ConcatLayer{}});
                    if (!mapped) return plain(layer);
                    MatrixXd map = MatrixXd::Zero(static_cast<Index>(new_width), static_cast<Index>(width));
                    Index r = 0, c = 0;
                    for (std::size_t k = 0; k < parts.size(); ++k) {
                        const auto rows = static_cast<Index>(net.layers[parts[k].layer].out_dim);
                        const auto cols = static_cast<Index>(pipeline.output_dims()[ins[k]]);
                        if (parts[k].map)
                            map.block(r, c, rows, cols) = *parts[k].map;
                        else
                            map.block(r, c, rows, cols).setIdentity();
                        r += rows;
                        c += cols;
                    }
                    return Lowered{layer, std::move(map)};
                },
                [&](const SigmoidOp&) {
                    const Lowered in = lower(ins[0]);
                    require_plain(in, node.id);
                    return plain(net.add_layer(Layer{node.id, {in.layer}, width, ActivationLayer{Activation::sigmoid}}));
                },
            },
            node.payload);
        memo[i] = res;
        return res;
    };

    const std::size_t sink = pipeline.sink_index();
    if (std::holds_alternative<SigmoidOp>(nodes[sink].payload)) {
        // Scores are sigmoid(logit); the network itself emits the logit.
        net.sink_sigmoid = true;
        const Lowered out = lower(pipeline.input_indices()[sink][0]);
        require_plain(out, nodes[sink].id);
        net.output = out.layer;
    } else {
        const Lowered out = lower(sink);
        require_plain(out, nodes[sink].id);
        net.output = out.layer;
    }
    if (cfg.start == Start::cold) init_cold(net, cfg.cold_seed);
    net.check();
    return net;
}

void init_cold(NeuralGraph& net, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : net.params) {
        if (!p.trainable) continue;
        const double a = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
        for (Index k = 0; k < p.value.size(); ++k) p.value.data()[k] = uniform(rng, -a, a);
    }
}

}  // namespace pipegrad
