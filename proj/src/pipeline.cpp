#include "pipegrad/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <unordered_map>

#include "pipegrad/detail/overloaded.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/detail/math.hpp"

namespace pipegrad {

using detail::sigmoid;

namespace {

using detail::overloaded;

constexpr std::array<std::pair<OpKind, std::string_view>, 11> kKindNames{{
    {OpKind::onehot, "onehot"},
    {OpKind::hash_encode, "hash_encode"},
    {OpKind::lda, "lda"},
    {OpKind::standardize, "standardize"},
    {OpKind::pca, "pca"},
    {OpKind::tree_ensemble, "tree_ensemble"},
    {OpKind::linear, "linear"},
    {OpKind::leaf_onehot, "leaf_onehot"},
    {OpKind::concat, "concat"},
    {OpKind::sigmoid, "sigmoid"},
    {OpKind::column_select, "column_select"},
}};

[[noreturn]] void dimension_error(const std::string& producer, std::size_t produced, const std::string& consumer,
                                  std::size_t expected) {
    throw Error("dimension mismatch: node '" + producer + "' outputs " + std::to_string(produced) +
                " values but node '" + consumer + "' expects " + std::to_string(expected));
}

}  // namespace

std::string to_string(OpKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return std::string(name);
    return "unknown";
}

std::optional<OpKind> op_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    return std::nullopt;
}

OpKind OperatorNode::kind() const {
    return std::visit(overloaded{
                          [](const OneHotOp&) { return OpKind::onehot; },
                          [](const HashEncodeOp&) { return OpKind::hash_encode; },
                          [](const LdaOp&) { return OpKind::lda; },
                          [](const StandardizeOp&) { return OpKind::standardize; },
                          [](const PcaOp&) { return OpKind::pca; },
                          [](const TreeEnsembleOp&) { return OpKind::tree_ensemble; },
                          [](const LinearOp&) { return OpKind::linear; },
                          [](const LeafOneHotOp&) { return OpKind::leaf_onehot; },
                          [](const ConcatOp&) { return OpKind::concat; },
                          [](const SigmoidOp&) { return OpKind::sigmoid; },
                          [](const ColumnSelectOp&) { return OpKind::column_select; },
                      },
                      payload);
}

const OperatorNode& PipelineGraph::node(std::string_view id) const {
    for (const auto& n : nodes)
        if (n.id == id) return n;
    throw Error("unknown node '" + std::string(id) + "'");
}

bool PipelineGraph::has_node(std::string_view id) const {
    return std::any_of(nodes.begin(), nodes.end(), [&](const OperatorNode& n) { return n.id == id; });
}

std::size_t Pipeline::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < graph_.nodes.size(); ++i)
        if (graph_.nodes[i].id == id) return i;
    throw Error("unknown node '" + std::string(id) + "'");
}

Pipeline validate(PipelineGraph graph) {
    Pipeline p;
    const std::size_t n = graph.nodes.size();
    if (n == 0) throw Error("pipeline has no nodes");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i)
        if (!index.emplace(graph.nodes[i].id, i).second) throw Error("duplicate node id '" + graph.nodes[i].id + "'");
    auto sink_it = index.find(graph.sink);
    if (sink_it == index.end()) throw Error("sink '" + graph.sink + "' is not a node");

    p.inputs_.resize(n);
    std::vector<std::vector<std::size_t>> consumers(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& in : graph.nodes[i].inputs) {
            auto it = index.find(in);
            if (it == index.end())
                throw Error("node '" + graph.nodes[i].id + "' consumes unknown node '" + in + "'");
            p.inputs_[i].push_back(it->second);
            consumers[it->second].push_back(i);
            ++indegree[i];
        }
    }

    // Kahn's algorithm; ties resolved by declaration order.
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        const auto it = std::min_element(ready.begin(), ready.end());
        const std::size_t i = *it;
        ready.erase(it);
        p.order_.push_back(i);
        for (std::size_t c : consumers[i])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (p.order_.size() != n) {
        std::string ids;
        for (std::size_t i = 0; i < n; ++i) {
            if (indegree[i] == 0) continue;
            if (!ids.empty()) ids += ", ";
            ids += graph.nodes[i].id;
        }
        throw Error("cycle through " + ids);
    }

    p.sink_ = sink_it->second;
    std::vector<char> reaches(n, 0);
    reaches[p.sink_] = 1;
    for (auto it = p.order_.rbegin(); it != p.order_.rend(); ++it) {
        if (!reaches[*it]) continue;
        for (std::size_t in : p.inputs_[*it]) reaches[in] = 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!reaches[i]) throw Error("node '" + graph.nodes[i].id + "' does not reach the sink '" + graph.sink + "'");

    p.dims_.assign(n, 0);
    p.layouts_.resize(n);
    for (std::size_t i : p.order_) {
        const auto& node = graph.nodes[i];
        const auto& ins = p.inputs_[i];
        auto arity = [&](std::size_t expected) {
            if (ins.size() != expected)
                throw Error("node '" + node.id + "' (" + to_string(node.kind()) + ") takes " +
                            std::to_string(expected) + " input(s), got " + std::to_string(ins.size()));
        };
        auto expect_in = [&](std::size_t expected) {
            if (p.dims_[ins[0]] != expected)
                dimension_error(graph.nodes[ins[0]].id, p.dims_[ins[0]], node.id, expected);
        };
        p.dims_[i] = std::visit(
            overloaded{
                [&](const OneHotOp& op) -> std::size_t {
                    arity(0);
                    if (op.vocab.cardinality() == 0) throw Error("onehot node '" + node.id + "' has empty vocabulary");
                    return op.vocab.cardinality();
                },
                [&](const HashEncodeOp& op) -> std::size_t {
                    arity(0);
                    if (op.bits < 1 || op.bits > 30) throw Error("hash node '" + node.id + "': bits out of range");
                    return std::size_t{1} << op.bits;
                },
                [&](const LdaOp& op) -> std::size_t {
                    arity(0);
                    return static_cast<std::size_t>(op.model.topics());
                },
                [&](const StandardizeOp& op) -> std::size_t {
                    arity(1);
                    if (op.mean.size() != op.scale.size())
                        throw Error("standardize node '" + node.id + "': mean/scale length differ");
                    expect_in(op.mean.size());
                    return op.mean.size();
                },
                [&](const PcaOp& op) -> std::size_t {
                    arity(1);
                    if (op.model.components.cols() != op.model.mean.size())
                        throw Error("pca node '" + node.id + "': components do not match mean");
                    expect_in(static_cast<std::size_t>(op.model.mean.size()));
                    return static_cast<std::size_t>(op.model.components.rows());
                },
                [&](const TreeEnsembleOp& op) -> std::size_t {
                    arity(1);
                    if (op.ensemble.trees.empty()) throw Error("tree_ensemble node '" + node.id + "' has no trees");
                    op.ensemble.validate();
                    expect_in(op.ensemble.num_features);
                    for (const auto& t : op.ensemble.trees) p.layouts_[i].push_back(layout(t));
                    return 1;
                },
                [&](const LinearOp& op) -> std::size_t {
                    arity(1);
                    expect_in(static_cast<std::size_t>(op.model.weights.size()));
                    return 1;
                },
                [&](const LeafOneHotOp&) -> std::size_t {
                    arity(1);
                    const auto& src = graph.nodes[ins[0]];
                    const auto* ens = std::get_if<TreeEnsembleOp>(&src.payload);
                    if (!ens)
                        throw Error("leaf_onehot node '" + node.id + "' must consume a tree_ensemble node, got '" +
                                    src.id + "'");
                    return ens->ensemble.total_leaves();
                },
                [&](const ConcatOp&) -> std::size_t {
                    if (ins.size() < 2)
                        throw Error("concat node '" + node.id + "' needs at least 2 inputs, got " +
                                    std::to_string(ins.size()));
                    std::size_t total = 0;
                    for (std::size_t in : ins) total += p.dims_[in];
                    return total;
                },
                [&](const SigmoidOp&) -> std::size_t {
                    arity(1);
                    return p.dims_[ins[0]];
                },
                [&](const ColumnSelectOp& op) -> std::size_t {
                    if (op.is_entry()) {
                        arity(0);
                        if (!op.indices.empty())
                            throw Error("column_select node '" + node.id + "' mixes columns and indices");
                        return op.columns.size();
                    }
                    arity(1);
                    for (std::size_t j : op.indices)
                        if (j >= p.dims_[ins[0]])
                            throw Error("column_select node '" + node.id + "' index " + std::to_string(j) +
                                        " out of range for input width " + std::to_string(p.dims_[ins[0]]));
                    if (op.indices.empty()) throw Error("column_select node '" + node.id + "' selects nothing");
                    return op.indices.size();
                },
            },
            node.payload);
    }
    if (p.dims_[p.sink_] != 1)
        throw Error("sink '" + graph.sink + "' must output one value, outputs " + std::to_string(p.dims_[p.sink_]));
    p.graph_ = std::move(graph);
    return p;
}

std::vector<std::vector<double>> pipeline_execute(const Pipeline& p, const Dataset& ds, std::size_t row) {
    const auto& nodes = p.graph().nodes;
    std::vector<std::vector<double>> out(nodes.size());
    for (std::size_t i : p.topo_order()) {
        const auto& node = nodes[i];
        const auto& ins = p.input_indices()[i];
        out[i] = std::visit(
            overloaded{
                [&](const OneHotOp& op) { return op.vocab.encode(ds.categorical(op.column)[row]); },
                [&](const HashEncodeOp& op) { return hash_encode(ds.categorical(op.column)[row], op.bits); },
                [&](const LdaOp& op) { return op.model.lookup(ds.categorical(op.column)[row]); },
                [&](const StandardizeOp& op) {
                    std::vector<double> v = out[ins[0]];
                    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (v[j] - op.mean[j]) / op.scale[j];
                    return v;
                },
                [&](const PcaOp& op) { return op.model.project(out[ins[0]]); },
                [&](const TreeEnsembleOp& op) {
                    return std::vector<double>{predict_ensemble(op.ensemble, out[ins[0]])};
                },
                [&](const LinearOp& op) { return std::vector<double>{op.model.predict(out[ins[0]])}; },
                [&](const LeafOneHotOp&) {
                    const std::size_t src = ins[0];
                    const auto& ens = std::get<TreeEnsembleOp>(nodes[src].payload).ensemble;
                    const auto& x = out[p.input_indices()[src][0]];
                    const auto& lays = p.layouts(src);
                    std::vector<double> v(p.output_dims()[i], 0.0);
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < ens.trees.size(); ++k) {
                        v[offset + static_cast<std::size_t>(lays[k].leaf_pos[reached_leaf(ens.trees[k], x)])] = 1.0;
                        offset += lays[k].leaves.size();
                    }
                    return v;
                },
                [&](const ConcatOp&) {
                    std::vector<double> v;
                    v.reserve(p.output_dims()[i]);
                    for (std::size_t in : ins) v.insert(v.end(), out[in].begin(), out[in].end());
                    return v;
                },
                [&](const SigmoidOp&) {
                    std::vector<double> v = out[ins[0]];
                    for (double& z : v) z = sigmoid(z);
                    return v;
                },
                [&](const ColumnSelectOp& op) {
                    std::vector<double> v;
                    if (op.is_entry()) {
                        v.reserve(op.columns.size());
                        for (const auto& c : op.columns) v.push_back(ds.numeric(c)[row]);
                    } else {
                        v.reserve(op.indices.size());
                        for (std::size_t j : op.indices) v.push_back(out[ins[0]][j]);
                    }
                    return v;
                },
            },
            node.payload);
    }
    return out;
}

double pipeline_predict(const Pipeline& p, const Dataset& ds, std::size_t row) {
    return pipeline_execute(p, ds, row)[p.sink_index()][0];
}

std::vector<double> pipeline_predict_all(const Pipeline& p, const Dataset& ds) {
    std::vector<double> out(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r) out[r] = pipeline_predict(p, ds, r);
    return out;
}

Eigen::MatrixXd node_output_matrix(const Pipeline& p, const Dataset& ds, std::string_view node_id) {
    const std::size_t idx = p.index_of(node_id);
    const auto width = static_cast<Eigen::Index>(p.output_dims()[idx]);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ds.rows()), width);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto outs = pipeline_execute(p, ds, r);
        for (Eigen::Index j = 0; j < width; ++j) m(static_cast<Eigen::Index>(r), j) = outs[idx][static_cast<std::size_t>(j)];
    }
    return m;
}

namespace {

std::string encoder_id(const EncoderPayload& enc) {
    return std::visit([](const auto& op) { return "enc_" + op.column; }, enc);
}

OpPayload to_payload(const EncoderPayload& enc) {
    return std::visit([](const auto& op) -> OpPayload { return op; }, enc);
}

// Adds numeric/encoder nodes and the feature concat; returns the id of the
// node carrying the full feature vector.
std::string add_feature_front(PipelineGraph& g, const NumericFront& numeric, const std::vector<EncoderPayload>& encoders,
                              const std::optional<std::vector<std::size_t>>& count_select) {
    std::vector<std::string> parts;
    if (!numeric.columns.empty()) {
        g.nodes.push_back({std::string(node_ids::numeric), {}, ColumnSelectOp{numeric.columns, {}}});
        g.nodes.push_back({std::string(node_ids::standardize), {std::string(node_ids::numeric)}, numeric.standardizer});
        parts.emplace_back(node_ids::standardize);
    }
    for (const auto& enc : encoders) {
        g.nodes.push_back({encoder_id(enc), {}, to_payload(enc)});
        parts.push_back(encoder_id(enc));
    }
    if (parts.empty()) throw Error("scenario needs at least one numeric column or encoder");
    std::string features = parts.front();
    if (parts.size() > 1) {
        g.nodes.push_back({std::string(node_ids::features), parts, ConcatOp{}});
        features = node_ids::features;
    }
    if (count_select) {
        g.nodes.push_back({std::string(node_ids::count_select), {features}, ColumnSelectOp{{}, *count_select}});
        features = node_ids::count_select;
    }
    return features;
}

}  // namespace

PipelineGraph build_scenario1(const Scenario1Parts& parts) {
    PipelineGraph g;
    const std::string features = add_feature_front(g, parts.numeric, parts.encoders, parts.count_select);
    g.nodes.push_back({std::string(node_ids::gbdt), {features}, TreeEnsembleOp{parts.gbdt}});
    g.sink = node_ids::gbdt;
    return g;
}

PipelineGraph build_scenario2(const Scenario2Parts& parts) {
    PipelineGraph g;
    const std::string features = add_feature_front(g, parts.numeric, parts.encoders, parts.count_select);
    g.nodes.push_back({std::string(node_ids::pca), {features}, PcaOp{parts.pca}});
    g.nodes.push_back({std::string(node_ids::gbdt), {std::string(node_ids::pca)}, TreeEnsembleOp{parts.gbdt}});
    g.nodes.push_back({std::string(node_ids::leaves), {std::string(node_ids::gbdt)}, LeafOneHotOp{}});
    g.nodes.push_back({std::string(node_ids::stacked), {std::string(node_ids::leaves), features}, ConcatOp{}});
    g.nodes.push_back({std::string(node_ids::linear), {std::string(node_ids::stacked)}, LinearOp{parts.linear}});
    g.sink = node_ids::linear;
    return g;
}

}  // namespace pipegrad
