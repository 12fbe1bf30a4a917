#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pipegrad/data.hpp"

namespace pipegrad {

inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

struct Parameter {
    std::string id;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;  // same shape as value
    bool trainable = false;
    std::size_t fan_in = 1;  // for cold initialization

    std::size_t size() const { return static_cast<std::size_t>(value.size()); }
};

// Frozen preprocessing: numeric dataset columns read verbatim (missing values
// were filled at load time).
struct NumericInputLayer {
    std::vector<std::string> columns;
};

enum class EmbeddingKey { vocabulary, hash };

// Dense lookup replacing one-hot, hash and LDA encoders. Rows of the table are
// indexed by vocabulary position or by hash slot; categories outside the
// vocabulary read the fixed `fallback` row, which is never trained.
class EmbeddingLayer {
public:
    EmbeddingLayer() = default;
    EmbeddingLayer(std::string column, std::vector<std::string> vocabulary, std::size_t table,
                   Eigen::RowVectorXd fallback);
    EmbeddingLayer(std::string column, int bits, std::size_t table);

    const std::string& column() const { return column_; }
    EmbeddingKey key() const { return key_; }
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    int bits() const { return bits_; }
    std::size_t table() const { return table_; }
    const Eigen::RowVectorXd& fallback() const { return fallback_; }
    // Table row for a category, or -1 for the fallback row.
    long row_of(std::string_view value) const;

private:
    std::string column_;
    EmbeddingKey key_ = EmbeddingKey::vocabulary;
    std::vector<std::string> vocabulary_;
    std::unordered_map<std::string, std::size_t> index_;
    int bits_ = 0;
    std::size_t table_ = kNoParam;
    Eigen::RowVectorXd fallback_;
};

// y = x W^T + b, W is out x in.
struct DenseLayer {
    std::size_t weight = kNoParam;
    std::size_t bias = kNoParam;
};

// Elementwise y = x * scale + shift (diagonal dense layer).
struct AffineLayer {
    std::size_t scale = kNoParam;
    std::size_t shift = kNoParam;
};

// One decision tree as a two-hidden-layer MLP.
//   decisions d = act(gamma1 * (x W1^T + b1))        internal x in
//   leaves    l = act(gamma2 * (d W2^T + b2))        leaves x internal
//   output      = l w3
// act is the sigmoid, or the strict unit step in hard mode. A single-leaf tree
// has no decision parameters and a constant leaf activation of 1.
struct TreeBlock {
    std::size_t w1 = kNoParam;
    std::size_t b1 = kNoParam;
    std::size_t w2 = kNoParam;
    std::size_t b2 = kNoParam;
    std::size_t w3 = kNoParam;  // absent when the ensemble exposes leaf activations
    std::size_t internal = 0;
    std::size_t leaves = 1;
};

struct TreeEnsembleLayer {
    std::vector<TreeBlock> trees;
    double base_score = 0.0;  // constant offset, never trained
    double gamma1 = 100.0;
    double gamma2 = 10.0;
    double dropout = 0.0;     // on leaf activations, train mode only
    bool leaf_output = false; // output concatenated leaf activations instead of the score
};

struct ConcatLayer {};
struct SelectLayer {
    std::vector<std::size_t> indices;
};
enum class Activation { sigmoid, relu };
struct ActivationLayer {
    Activation fn = Activation::relu;
};
struct DropoutLayer {
    double p = 0.0;
};

using LayerOp = std::variant<NumericInputLayer, EmbeddingLayer, DenseLayer, AffineLayer, TreeEnsembleLayer, ConcatLayer,
                             SelectLayer, ActivationLayer, DropoutLayer>;

struct Layer {
    std::string id;
    std::vector<std::size_t> inputs;  // indices of earlier layers
    std::size_t out_dim = 0;
    LayerOp op;
};

std::string layer_kind(const LayerOp& op);

// The compiled differentiable program. Layers are stored in topological
// order; parameters live in a flat registry referenced by index.
class NeuralGraph {
public:
    std::vector<Layer> layers;
    std::vector<Parameter> params;
    std::size_t output = 0;     // layer producing the logit
    bool sink_sigmoid = false;  // source pipeline ended in a sigmoid; scores = sigmoid(logit)
    std::vector<ColumnSchema> frozen_inputs;  // dataset columns consumed by the input layers

    std::size_t add_param(std::string id, Eigen::MatrixXd value, bool trainable, std::size_t fan_in);
    std::size_t add_layer(Layer layer);
    std::size_t param_index(std::string_view id) const;
    std::size_t layer_index(std::string_view id) const;
    // Parameters referenced by a layer, in a fixed order.
    std::vector<std::size_t> layer_params(std::size_t layer) const;
    // Throws on dangling references, non-topological inputs, shape errors, or
    // trainable parameters upstream of a frozen input layer.
    void check() const;
    void zero_grad();
};

}  // namespace pipegrad
