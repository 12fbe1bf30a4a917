#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pipegrad/data.hpp"
#include "pipegrad/encoders.hpp"
#include "pipegrad/lda.hpp"
#include "pipegrad/linear.hpp"
#include "pipegrad/pca.hpp"
#include "pipegrad/tree.hpp"

namespace pipegrad {

enum class OpKind {
    onehot,
    hash_encode,
    lda,
    standardize,
    pca,
    tree_ensemble,
    linear,
    leaf_onehot,
    concat,
    sigmoid,
    column_select,
};

std::string to_string(OpKind kind);
std::optional<OpKind> op_kind_from_string(std::string_view name);

// Entry form: `columns` names numeric dataset columns and the node has no inputs.
// Selector form: `indices` picks dimensions of the single input (count selectors).
struct ColumnSelectOp {
    std::vector<std::string> columns;
    std::vector<std::size_t> indices;
    bool is_entry() const { return !columns.empty(); }
};
struct OneHotOp {
    std::string column;
    OneHotVocab vocab;
};
struct HashEncodeOp {
    std::string column;
    int bits = 10;
};
struct LdaOp {
    std::string column;
    LdaModel model;
};
struct StandardizeOp {
    std::vector<double> mean;
    std::vector<double> scale;
};
struct PcaOp {
    PcaModel model;
};
struct TreeEnsembleOp {
    TreeEnsemble ensemble;
};
struct LinearOp {
    LinearModel model;
};
struct LeafOneHotOp {};
struct ConcatOp {};
struct SigmoidOp {};

using OpPayload = std::variant<OneHotOp, HashEncodeOp, LdaOp, StandardizeOp, PcaOp, TreeEnsembleOp, LinearOp,
                               LeafOneHotOp, ConcatOp, SigmoidOp, ColumnSelectOp>;

struct OperatorNode {
    std::string id;
    std::vector<std::string> inputs;
    OpPayload payload;

    OpKind kind() const;
};

struct PipelineGraph {
    std::vector<OperatorNode> nodes;
    std::string sink;

    const OperatorNode& node(std::string_view id) const;
    bool has_node(std::string_view id) const;
};

// A graph that passed validation: topological order, resolved edges and
// output widths. Immutable; prediction is safe from multiple threads.
class Pipeline {
public:
    const PipelineGraph& graph() const { return graph_; }
    const std::vector<std::size_t>& topo_order() const { return order_; }
    const std::vector<std::vector<std::size_t>>& input_indices() const { return inputs_; }
    const std::vector<std::size_t>& output_dims() const { return dims_; }
    std::size_t sink_index() const { return sink_; }
    std::size_t index_of(std::string_view id) const;
    // Per tree_ensemble node: canonical layouts of its trees (empty for other kinds).
    const std::vector<TreeLayout>& layouts(std::size_t node) const { return layouts_[node]; }

private:
    friend Pipeline validate(PipelineGraph graph);
    PipelineGraph graph_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::size_t>> inputs_;
    std::vector<std::size_t> dims_;
    std::vector<std::vector<TreeLayout>> layouts_;
    std::size_t sink_ = 0;
};

Pipeline validate(PipelineGraph graph);

// Output of every node (indexed like graph().nodes) for one dataset row.
std::vector<std::vector<double>> pipeline_execute(const Pipeline& p, const Dataset& ds, std::size_t row);
// Scalar output of the sink: a raw logit unless the sink is a sigmoid.
double pipeline_predict(const Pipeline& p, const Dataset& ds, std::size_t row);
std::vector<double> pipeline_predict_all(const Pipeline& p, const Dataset& ds);
// Rows x width matrix of one node's output over the whole dataset.
Eigen::MatrixXd node_output_matrix(const Pipeline& p, const Dataset& ds, std::string_view node_id);

// Canned scenario wiring.
struct NumericFront {
    std::vector<std::string> columns;
    StandardizeOp standardizer;
};
using EncoderPayload = std::variant<OneHotOp, HashEncodeOp, LdaOp>;

// numeric -> standardize, encoders, concat, [count select], tree ensemble.
struct Scenario1Parts {
    NumericFront numeric;
    std::vector<EncoderPayload> encoders;
    std::optional<std::vector<std::size_t>> count_select;
    TreeEnsemble gbdt;
};
PipelineGraph build_scenario1(const Scenario1Parts& parts);

// x = [standardized numeric, encoders]; PCA(x) -> GBDT -> leaf one-hot;
// concat(leaves, x) -> linear.
struct Scenario2Parts {
    NumericFront numeric;
    std::vector<EncoderPayload> encoders;
    std::optional<std::vector<std::size_t>> count_select;
    PcaModel pca;
    TreeEnsemble gbdt;
    LinearModel linear;
};
PipelineGraph build_scenario2(const Scenario2Parts& parts);

// Node ids used by the scenario builders.
namespace node_ids {
inline constexpr std::string_view numeric = "numeric";
inline constexpr std::string_view standardize = "standardize";
inline constexpr std::string_view features = "features";
inline constexpr std::string_view count_select = "count_select";
inline constexpr std::string_view pca = "pca";
inline constexpr std::string_view gbdt = "gbdt";
inline constexpr std::string_view leaves = "leaves";
inline constexpr std::string_view stacked = "stacked";
inline constexpr std::string_view linear = "linear";
}  // namespace node_ids

}  // namespace pipegrad
