#include "pipegrad/network.hpp"

#include <string>

#include "pipegrad/data.hpp"
#include "pipegrad/detail/overloaded.hpp"
#include "pipegrad/error.hpp"

namespace pipegrad {

using detail::overloaded;

EmbeddingLayer::EmbeddingLayer(std::string column, std::vector<std::string> vocabulary, std::size_t table,
                               Eigen::RowVectorXd fallback)
    : column_(std::move(column)),
      key_(EmbeddingKey::vocabulary),
      vocabulary_(std::move(vocabulary)),
      table_(table),
      fallback_(std::move(fallback)) {
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) index_.emplace(vocabulary_[i], i);
}

EmbeddingLayer::EmbeddingLayer(std::string column, int bits, std::size_t table)
    : column_(std::move(column)), key_(EmbeddingKey::hash), bits_(bits), table_(table) {}

long EmbeddingLayer::row_of(std::string_view value) const {
    if (key_ == EmbeddingKey::hash) return static_cast<long>(hash_category(value, bits_));
    auto it = index_.find(std::string(value));
    return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::string layer_kind(const LayerOp& op) {
    return std::visit(overloaded{
                          [](const NumericInputLayer&) { return std::string("numeric_input"); },
                          [](const EmbeddingLayer&) { return std::string("embedding"); },
                          [](const DenseLayer&) { return std::string("dense"); },
                          [](const AffineLayer&) { return std::string("affine"); },
                          [](const TreeEnsembleLayer&) { return std::string("tree_ensemble"); },
                          [](const ConcatLayer&) { return std::string("concat"); },
                          [](const SelectLayer&) { return std::string("select"); },
                          [](const ActivationLayer& a) {
                              return std::string(a.fn == Activation::sigmoid ? "sigmoid" : "relu");
                          },
                          [](const DropoutLayer&) { return std::string("dropout"); },
                      },
                      op);
}

std::size_t NeuralGraph::add_param(std::string id, Eigen::MatrixXd value, bool trainable, std::size_t fan_in) {
    Parameter p;
    p.id = std::move(id);
    p.grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    p.value = std::move(value);
    p.trainable = trainable;
    p.fan_in = fan_in == 0 ? 1 : fan_in;
    params.push_back(std::move(p));
    return params.size() - 1;
}

std::size_t NeuralGraph::add_layer(Layer layer) {
    for (std::size_t in : layer.inputs)
        if (in >= layers.size()) throw Error("layer '" + layer.id + "' references a later layer");
    layers.push_back(std::move(layer));
    return layers.size() - 1;
}

std::size_t NeuralGraph::param_index(std::string_view id) const {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].id == id) return i;
    throw Error("unknown parameter '" + std::string(id) + "'");
}

std::size_t NeuralGraph::layer_index(std::string_view id) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].id == id) return i;
    throw Error("unknown layer '" + std::string(id) + "'");
}

std::vector<std::size_t> NeuralGraph::layer_params(std::size_t layer) const {
    std::vector<std::size_t> out;
    auto add = [&](std::size_t p) {
        if (p != kNoParam) out.push_back(p);
    };
    std::visit(overloaded{
                   [&](const EmbeddingLayer& e) { add(e.table()); },
                   [&](const DenseLayer& d) {
                       add(d.weight);
                       add(d.bias);
                   },
                   [&](const AffineLayer& a) {
                       add(a.scale);
                       add(a.shift);
                   },
                   [&](const TreeEnsembleLayer& t) {
                       for (const auto& b : t.trees) {
                           add(b.w1);
                           add(b.b1);
                           add(b.w2);
                           add(b.b2);
                           add(b.w3);
                       }
                   },
                   [](const auto&) {},
               },
               layers.at(layer).op);
    return out;
}

void NeuralGraph::zero_grad() {
    for (auto& p : params) p.grad.setZero(p.value.rows(), p.value.cols());
}

void NeuralGraph::check() const {
    std::vector<int> owner(params.size(), -1);
    auto shape = [&](const Layer& l, std::size_t p, Eigen::Index rows, Eigen::Index cols, const char* what) {
        if (p == kNoParam) throw Error("layer '" + l.id + "' is missing parameter " + what);
        if (p >= params.size()) throw Error("layer '" + l.id + "' references parameter out of range");
        const auto& v = params[p].value;
        if (v.rows() != rows || v.cols() != cols)
            throw Error("parameter '" + params[p].id + "' of layer '" + l.id + "' has shape " +
                        std::to_string(v.rows()) + "x" + std::to_string(v.cols()) + ", expected " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    };
    std::vector<char> trainable_upstream(layers.size(), 0);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        for (std::size_t in : l.inputs)
            if (in >= i) throw Error("layer '" + l.id + "' is not in topological order");
        auto in_dim = [&](std::size_t k) -> Eigen::Index {
            if (k >= l.inputs.size()) throw Error("layer '" + l.id + "' is missing an input");
            return static_cast<Eigen::Index>(layers[l.inputs[k]].out_dim);
        };
        const auto out = static_cast<Eigen::Index>(l.out_dim);
        std::visit(overloaded{
                       [&](const NumericInputLayer& n) {
                           if (!l.inputs.empty()) throw Error("input layer '" + l.id + "' cannot have inputs");
                           if (n.columns.size() != l.out_dim) throw Error("input layer '" + l.id + "' width mismatch");
                       },
                       [&](const EmbeddingLayer& e) {
                           if (!l.inputs.empty()) throw Error("embedding layer '" + l.id + "' cannot have inputs");
                           const Eigen::Index rows = e.key() == EmbeddingKey::hash
                                                         ? (Eigen::Index{1} << e.bits())
                                                         : static_cast<Eigen::Index>(e.vocabulary().size());
                           shape(l, e.table(), rows, out, "table");
                       },
                       [&](const DenseLayer& d) {
                           shape(l, d.weight, out, in_dim(0), "weight");
                           shape(l, d.bias, out, 1, "bias");
                       },
                       [&](const AffineLayer& a) {
                           if (in_dim(0) != out) throw Error("affine layer '" + l.id + "' width mismatch");
                           shape(l, a.scale, out, 1, "scale");
                           shape(l, a.shift, out, 1, "shift");
                       },
                       [&](const TreeEnsembleLayer& t) {
                           const Eigen::Index d = in_dim(0);
                           std::size_t total_leaves = 0;
                           for (const auto& b : t.trees) {
                               const auto I = static_cast<Eigen::Index>(b.internal);
                               const auto m = static_cast<Eigen::Index>(b.leaves);
                               if (b.internal + 1 != b.leaves) throw Error("tree block in '" + l.id + "' is not binary");
                               if (b.internal > 0) {
                                   shape(l, b.w1, I, d, "W1");
                                   shape(l, b.b1, I, 1, "b1");
                                   shape(l, b.w2, m, I, "W2");
                                   shape(l, b.b2, m, 1, "b2");
                               }
                               if (!t.leaf_output) shape(l, b.w3, m, 1, "w3");
                               total_leaves += b.leaves;
                           }
                           if (l.out_dim != (t.leaf_output ? total_leaves : 1))
                               throw Error("tree layer '" + l.id + "' output width mismatch");
                       },
                       [&](const ConcatLayer&) {
                           std::size_t total = 0;
                           for (std::size_t in : l.inputs) total += layers[in].out_dim;
                           if (total != l.out_dim) throw Error("concat layer '" + l.id + "' width mismatch");
                       },
                       [&](const SelectLayer& s) {
                           for (std::size_t j : s.indices)
                               if (static_cast<Eigen::Index>(j) >= in_dim(0))
                                   throw Error("select layer '" + l.id + "' index out of range");
                           if (s.indices.size() != l.out_dim) throw Error("select layer '" + l.id + "' width mismatch");
                       },
                       [&](const ActivationLayer&) {
                           if (in_dim(0) != out) throw Error("activation layer '" + l.id + "' width mismatch");
                       },
                       [&](const DropoutLayer& dl) {
                           if (in_dim(0) != out) throw Error("dropout layer '" + l.id + "' width mismatch");
                           if (!(dl.p >= 0.0 && dl.p < 1.0)) throw Error("dropout layer '" + l.id + "' p out of range");
                       },
                   },
                   l.op);
        for (std::size_t p : layer_params(i)) {
            if (owner[p] != -1)
                throw Error("parameter '" + params[p].id + "' belongs to more than one layer");
            owner[p] = static_cast<int>(i);
            if (params[p].trainable) trainable_upstream[i] = 1;
        }
        for (std::size_t in : l.inputs)
            if (trainable_upstream[in]) trainable_upstream[i] = 1;
    }
    for (std::size_t p = 0; p < params.size(); ++p)
        if (owner[p] == -1) throw Error("parameter '" + params[p].id + "' belongs to no layer");
    if (layers.empty() || output >= layers.size()) throw Error("network has no output layer");
    if (layers[output].out_dim != 1) throw Error("output layer '" + layers[output].id + "' must have width 1");
}

}  // namespace pipegrad
