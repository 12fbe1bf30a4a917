#include "pipegrad/runtime.hpp"

#include <cmath>
#include <string>

#include "pipegrad/detail/math.hpp"
#include "pipegrad/detail/overloaded.hpp"
#include "pipegrad/error.hpp"

namespace pipegrad {

using detail::overloaded;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

// Elementwise activation for a tree-block layer: sigmoid(gamma*z) with its
// derivative, or the strict unit step in hard mode.
void activate(const MatrixXd& z, double gamma, Mode mode, MatrixXd& act, MatrixXd* grad) {
    act.resize(z.rows(), z.cols());
    if (mode == Mode::hard) {
        act = (z.array() > 0.0).cast<double>();
        return;
    }
    if (grad) grad->resize(z.rows(), z.cols());
    for (Index j = 0; j < z.cols(); ++j)
        for (Index i = 0; i < z.rows(); ++i) {
            const double a = gamma * z(i, j);
            const double s = detail::sigmoid(a);
            act(i, j) = s;
            // sigmoid(a) * sigmoid(-a) keeps precision when s is close to 1
            if (grad) (*grad)(i, j) = gamma * s * detail::sigmoid(-a);
        }
}

MatrixXd dropout_mask(Index rows, Index cols, double p, Rng& rng) {
    MatrixXd m(rows, cols);
    const double keep = 1.0 / (1.0 - p);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = uniform01(rng) < p ? 0.0 : keep;
    return m;
}

[[noreturn]] void shape_error(const Layer& l, const std::string& what) {
    throw Error("layer '" + l.id + "': " + what);
}

}  // namespace

Eigen::VectorXd forward(const NeuralGraph& net, const Dataset& ds, std::span<const std::size_t> rows, Mode mode,
                        Rng* rng, Trace* trace) {
    const Index n = static_cast<Index>(rows.size());
    std::vector<MatrixXd> out(net.layers.size());
    if (trace) {
        trace->mode = mode;
        trace->batch = rows.size();
        trace->valid = false;
        trace->trees.assign(net.layers.size(), {});
        trace->embedding_rows.assign(net.layers.size(), {});
        trace->masks.assign(net.layers.size(), MatrixXd());
    }
    const bool train = mode == Mode::train;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& layer = net.layers[li];
        const auto width = static_cast<Index>(layer.out_dim);
        auto input = [&](std::size_t k) -> const MatrixXd& { return out[layer.inputs.at(k)]; };
        MatrixXd y;
        std::visit(
            overloaded{
                [&](const NumericInputLayer& op) {
                    y.resize(n, width);
                    for (Index c = 0; c < width; ++c) {
                        const auto& col = ds.numeric(op.columns[static_cast<std::size_t>(c)]);
                        for (Index r = 0; r < n; ++r) y(r, c) = col[rows[static_cast<std::size_t>(r)]];
                    }
                },
                [&](const EmbeddingLayer& op) {
                    const MatrixXd& table = net.params[op.table()].value;
                    const auto& col = ds.categorical(op.column());
                    y.resize(n, width);
                    std::vector<long> picked(rows.size());
                    for (Index r = 0; r < n; ++r) {
                        const long row = op.row_of(col[rows[static_cast<std::size_t>(r)]]);
                        picked[static_cast<std::size_t>(r)] = row;
                        if (row < 0)
                            y.row(r) = op.fallback();
                        else
                            y.row(r) = table.row(row);
                    }
                    if (trace) trace->embedding_rows[li] = std::move(picked);
                },
                [&](const DenseLayer& op) {
                    const MatrixXd& x = input(0);
                    if (x.cols() != net.params[op.weight].value.cols()) shape_error(layer, "input width mismatch");
                    y = x * net.params[op.weight].value.transpose();
                    y.rowwise() += net.params[op.bias].value.col(0).transpose();
                },
                [&](const AffineLayer& op) {
                    const MatrixXd& x = input(0);
                    if (x.cols() != width) shape_error(layer, "input width mismatch");
                    y = x.array().rowwise() * net.params[op.scale].value.col(0).transpose().array();
                    y.rowwise() += net.params[op.shift].value.col(0).transpose();
                },
                [&](const TreeEnsembleLayer& op) {
                    const MatrixXd& x = input(0);
                    const bool drop = train && op.dropout > 0.0;
                    if (drop && !rng) shape_error(layer, "train-mode dropout needs a random generator");
                    y = op.leaf_output ? MatrixXd(n, width) : MatrixXd::Constant(n, 1, op.base_score);
                    std::vector<Trace::TreeCache> caches(trace ? op.trees.size() : 0);
                    Index offset = 0;
                    for (std::size_t k = 0; k < op.trees.size(); ++k) {
                        const TreeBlock& b = op.trees[k];
                        const auto m = static_cast<Index>(b.leaves);
                        Trace::TreeCache local;
                        Trace::TreeCache& c = trace ? caches[k] : local;
                        if (b.internal == 0) {
                            c.l = MatrixXd::Ones(n, 1);
                        } else {
                            const MatrixXd& w1 = net.params[b.w1].value;
                            if (x.cols() != w1.cols()) shape_error(layer, "input width mismatch");
                            MatrixXd z1 = x * w1.transpose();
                            z1.rowwise() += net.params[b.b1].value.col(0).transpose();
                            activate(z1, op.gamma1, mode, c.d, trace ? &c.d_grad : nullptr);
                            MatrixXd z2 = c.d * net.params[b.w2].value.transpose();
                            z2.rowwise() += net.params[b.b2].value.col(0).transpose();
                            activate(z2, op.gamma2, mode, c.l, trace ? &c.l_grad : nullptr);
                        }
                        if (drop) {
                            c.mask = dropout_mask(n, m, op.dropout, *rng);
                            c.l.array() *= c.mask.array();
                        }
                        if (op.leaf_output)
                            y.middleCols(offset, m) = c.l;
                        else
                            y.col(0) += c.l * net.params[b.w3].value.col(0);
                        offset += m;
                    }
                    if (trace) trace->trees[li] = std::move(caches);
                },
                [&](const ConcatLayer&) {
                    y.resize(n, width);
                    Index offset = 0;
                    for (std::size_t k = 0; k < layer.inputs.size(); ++k) {
                        const MatrixXd& x = input(k);
                        y.middleCols(offset, x.cols()) = x;
                        offset += x.cols();
                    }
                },
                [&](const SelectLayer& op) {
                    const MatrixXd& x = input(0);
                    y.resize(n, width);
                    for (Index j = 0; j < width; ++j)
                        y.col(j) = x.col(static_cast<Index>(op.indices[static_cast<std::size_t>(j)]));
                },
                [&](const ActivationLayer& op) {
                    const MatrixXd& x = input(0);
                    if (op.fn == Activation::relu)
                        y = x.cwiseMax(0.0);
                    else
                        y = x.unaryExpr([](double v) { return detail::sigmoid(v); });
                },
                [&](const DropoutLayer& op) {
                    y = input(0);
                    if (train && op.p > 0.0) {
                        if (!rng) shape_error(layer, "train-mode dropout needs a random generator");
                        MatrixXd mask = dropout_mask(n, width, op.p, *rng);
                        y.array() *= mask.array();
                        if (trace) trace->masks[li] = std::move(mask);
                    }
                },
            },
            layer.op);
        if (y.rows() != n || y.cols() != width)
            shape_error(layer, "produced " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                                   ", declared width " + std::to_string(width));
        out[li] = std::move(y);
    }
    Eigen::VectorXd logits = out.at(net.output).col(0);
    if (trace) {
        trace->outputs = std::move(out);
        trace->valid = true;
    }
    return logits;
}

Eigen::VectorXd predict_logits(const NeuralGraph& net, const Dataset& ds, Mode mode, std::size_t chunk) {
    if (mode == Mode::train) throw Error("predict_logits runs in eval or hard mode");
    Eigen::VectorXd logits(static_cast<Index>(ds.rows()));
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < ds.rows(); start += chunk) {
        const std::size_t end = std::min(ds.rows(), start + chunk);
        rows.resize(end - start);
        for (std::size_t r = start; r < end; ++r) rows[r - start] = r;
        logits.segment(static_cast<Index>(start), static_cast<Index>(end - start)) = forward(net, ds, rows, mode);
    }
    return logits;
}

void backward(NeuralGraph& net, Trace& trace, const Eigen::VectorXd& dlogits) {
    if (!trace.valid) throw Error("backward without forward");
    if (trace.mode == Mode::hard) throw Error("non-differentiable mode");
    const Index n = static_cast<Index>(trace.batch);
    if (dlogits.size() != n) throw Error("backward: gradient length does not match the batch");
    trace.valid = false;
    net.zero_grad();

    // Gradients flow only into layers that have a trainable parameter at or
    // upstream of them; everything else is frozen preprocessing.
    const std::size_t count = net.layers.size();
    std::vector<char> needs(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t p : net.layer_params(i))
            if (net.params[p].trainable) needs[i] = 1;
        for (std::size_t in : net.layers[i].inputs)
            if (needs[in]) needs[i] = 1;
    }

    std::vector<MatrixXd> grads(count);
    grads[net.output] = dlogits;
    auto accumulate = [&](std::size_t layer, const MatrixXd& g) {
        if (!needs[layer]) return;
        if (grads[layer].size() == 0)
            grads[layer] = g;
        else
            grads[layer] += g;
    };
    auto param = [&](std::size_t p) -> Parameter* {
        return p != kNoParam && net.params[p].trainable ? &net.params[p] : nullptr;
    };

    for (std::size_t li = count; li-- > 0;) {
        if (!needs[li] || grads[li].size() == 0) continue;
        const Layer& layer = net.layers[li];
        const MatrixXd& dy = grads[li];
        auto input = [&](std::size_t k) -> const MatrixXd& { return trace.outputs[layer.inputs.at(k)]; };
        auto input_needs = [&](std::size_t k) { return needs[layer.inputs.at(k)] != 0; };
        std::visit(
            overloaded{
                [&](const NumericInputLayer&) {},
                [&](const EmbeddingLayer& op) {
                    Parameter* t = param(op.table());
                    if (!t) return;
                    const auto& picked = trace.embedding_rows[li];
                    for (Index r = 0; r < n; ++r) {
                        const long row = picked[static_cast<std::size_t>(r)];
                        if (row >= 0) t->grad.row(row) += dy.row(r);
                    }
                },
                [&](const DenseLayer& op) {
                    if (Parameter* w = param(op.weight)) w->grad += dy.transpose() * input(0);
                    if (Parameter* b = param(op.bias)) b->grad.col(0) += dy.colwise().sum().transpose();
                    if (input_needs(0)) accumulate(layer.inputs[0], dy * net.params[op.weight].value);
                },
                [&](const AffineLayer& op) {
                    if (Parameter* s = param(op.scale))
                        s->grad.col(0) += (dy.array() * input(0).array()).colwise().sum().transpose().matrix();
                    if (Parameter* b = param(op.shift)) b->grad.col(0) += dy.colwise().sum().transpose();
                    if (input_needs(0))
                        accumulate(layer.inputs[0],
                                   dy.array().rowwise() * net.params[op.scale].value.col(0).transpose().array());
                },
                [&](const TreeEnsembleLayer& op) {
                    const MatrixXd& x = input(0);
                    const bool want_dx = input_needs(0);
                    MatrixXd dx;
                    if (want_dx) dx = MatrixXd::Zero(n, x.cols());
                    Index offset = 0;
                    for (std::size_t k = 0; k < op.trees.size(); ++k) {
                        const TreeBlock& b = op.trees[k];
                        const auto m = static_cast<Index>(b.leaves);
                        const Trace::TreeCache& c = trace.trees[li][k];
                        MatrixXd dl;  // gradient w.r.t. post-dropout leaf activations
                        if (op.leaf_output) {
                            dl = dy.middleCols(offset, m);
                        } else {
                            if (Parameter* w3 = param(b.w3)) w3->grad.col(0) += c.l.transpose() * dy.col(0);
                            dl = dy.col(0) * net.params[b.w3].value.col(0).transpose();
                        }
                        offset += m;
                        if (b.internal == 0) continue;
                        Parameter* pw1 = param(b.w1);
                        Parameter* pb1 = param(b.b1);
                        Parameter* pw2 = param(b.w2);
                        Parameter* pb2 = param(b.b2);
                        if (!pw1 && !pb1 && !pw2 && !pb2 && !want_dx) continue;
                        if (c.mask.size() != 0) dl.array() *= c.mask.array();
                        const MatrixXd da2 = dl.cwiseProduct(c.l_grad);
                        if (pw2) pw2->grad += da2.transpose() * c.d;
                        if (pb2) pb2->grad.col(0) += da2.colwise().sum().transpose();
                        if (!pw1 && !pb1 && !want_dx) continue;
                        const MatrixXd da1 = (da2 * net.params[b.w2].value).cwiseProduct(c.d_grad);
                        if (pw1) pw1->grad += da1.transpose() * x;
                        if (pb1) pb1->grad.col(0) += da1.colwise().sum().transpose();
                        if (want_dx) dx += da1 * net.params[b.w1].value;
                    }
                    if (want_dx) accumulate(layer.inputs[0], dx);
                },
                [&](const ConcatLayer&) {
                    Index offset = 0;
                    for (std::size_t k = 0; k < layer.inputs.size(); ++k) {
                        const Index w = static_cast<Index>(net.layers[layer.inputs[k]].out_dim);
                        if (input_needs(k)) accumulate(layer.inputs[k], dy.middleCols(offset, w));
                        offset += w;
                    }
                },
                [&](const SelectLayer& op) {
                    if (!input_needs(0)) return;
                    MatrixXd dx = MatrixXd::Zero(n, static_cast<Index>(net.layers[layer.inputs[0]].out_dim));
                    for (std::size_t j = 0; j < op.indices.size(); ++j)
                        dx.col(static_cast<Index>(op.indices[j])) += dy.col(static_cast<Index>(j));
                    accumulate(layer.inputs[0], dx);
                },
                [&](const ActivationLayer& op) {
                    if (!input_needs(0)) return;
                    const MatrixXd& y = trace.outputs[li];
                    if (op.fn == Activation::relu)
                        accumulate(layer.inputs[0], ((y.array() > 0.0).cast<double>() * dy.array()).matrix());
                    else
                        accumulate(layer.inputs[0], (dy.array() * y.array() * (1.0 - y.array())).matrix());
                },
                [&](const DropoutLayer&) {
                    if (!input_needs(0)) return;
                    const MatrixXd& mask = trace.masks[li];
                    if (mask.size() == 0)
                        accumulate(layer.inputs[0], dy);
                    else
                        accumulate(layer.inputs[0], dy.cwiseProduct(mask));
                },
            },
            layer.op);
    }
}

LossResult loss_logistic(const Eigen::VectorXd& logits, std::span<const int> labels) {
    if (static_cast<std::size_t>(logits.size()) != labels.size())
        throw Error("loss: " + std::to_string(logits.size()) + " logits but " + std::to_string(labels.size()) +
                    " labels");
    LossResult res;
    res.grad.resize(logits.size());
    if (labels.empty()) return res;
    const double inv = 1.0 / static_cast<double>(labels.size());
    double total = 0.0;
    for (Index i = 0; i < logits.size(); ++i) {
        const double z = logits(i);
        const double y = labels[static_cast<std::size_t>(i)];
        total += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - z * y;
        res.grad(i) = (detail::sigmoid(z) - y) * inv;
    }
    res.loss = total * inv;
    return res;
}

AdamState::AdamState(const NeuralGraph& net) {
    m.reserve(net.params.size());
    v.reserve(net.params.size());
    for (const auto& p : net.params) {
        m.push_back(MatrixXd::Zero(p.value.rows(), p.value.cols()));
        v.push_back(MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
}

void adam_step(NeuralGraph& net, AdamState& state, const AdamConfig& cfg) {
    if (state.m.size() != net.params.size()) throw Error("optimizer state does not match the network");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        Parameter& p = net.params[i];
        if (!p.trainable) continue;
        auto& m = state.m[i];
        auto& v = state.v[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * p.grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
        if (cfg.weight_decay != 0.0) p.value -= cfg.lr * cfg.weight_decay * p.value;
        p.value.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
    }
}

}  // namespace pipegrad
