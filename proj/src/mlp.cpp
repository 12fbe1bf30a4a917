#include "pipegrad/mlp.hpp"

#include <cmath>
#include <limits>

#include "pipegrad/encoders.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/translator.hpp"

namespace pipegrad {

using Eigen::MatrixXd;

namespace {

std::size_t add_dense(NeuralGraph& net, const std::string& id, std::size_t input, std::size_t out) {
    const std::size_t in = net.layers[input].out_dim;
    DenseLayer op;
    op.weight = net.add_param(id + "/W", MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                              true, in);
    op.bias = net.add_param(id + "/b", MatrixXd::Zero(static_cast<Eigen::Index>(out), 1), true, in);
    return net.add_layer(Layer{id, {input}, out, op});
}

}  // namespace

std::size_t mlp_input_dim(const Dataset& train) {
    std::size_t d = train.numeric_names().size();
    for (const auto& c : train.categorical_names()) d += fit_onehot(train.categorical(c)).cardinality();
    return d;
}

NeuralGraph build_mlp_baseline(const Dataset& train, const MlpConfig& cfg) {
    if (cfg.hidden[0] < 1 || cfg.hidden[1] < 1) throw ConfigError("MLP hidden sizes must be at least 1");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("MLP dropout must lie in [0, 1)");
    NeuralGraph net;
    std::vector<std::size_t> parts;

    const auto numeric = train.numeric_names();
    if (!numeric.empty()) {
        StandardizeOp std_op;
        for (const auto& c : numeric) {
            const Standardizer s = fit_standardizer(train.numeric(c));
            std_op.mean.push_back(s.mean);
            std_op.scale.push_back(s.scale);
            net.frozen_inputs.push_back(ColumnSchema{c, ColumnKind::numeric, MissingPolicy::fill_zero});
        }
        const std::size_t in = net.add_layer(Layer{"numeric", {}, numeric.size(), NumericInputLayer{numeric}});
        DenseInit init = translate_standardizer(std_op);
        AffineLayer a;
        a.scale = net.add_param("standardize/scale", std::move(init.weight), false, 1);
        a.shift = net.add_param("standardize/shift", MatrixXd(init.bias), false, 1);
        parts.push_back(net.add_layer(Layer{"standardize", {in}, numeric.size(), a}));
    }
    for (const auto& c : train.categorical_names()) {
        const OneHotVocab vocab = fit_onehot(train.categorical(c));
        const auto v = static_cast<Eigen::Index>(vocab.cardinality());
        const std::size_t t = net.add_param("enc_" + c + "/table", onehot_table(vocab), false, 1);
        net.frozen_inputs.push_back(ColumnSchema{c, ColumnKind::categorical, MissingPolicy::fill_zero});
        parts.push_back(net.add_layer(
            Layer{"enc_" + c, {}, vocab.cardinality(), EmbeddingLayer(c, vocab.categories(), t, Eigen::RowVectorXd::Zero(v))}));
    }
    if (parts.empty()) throw Error("MLP baseline needs at least one input column");
    std::size_t x = parts[0];
    if (parts.size() > 1) {
        std::size_t width = 0;
        for (std::size_t p : parts) width += net.layers[p].out_dim;
        x = net.add_layer(Layer{"features", parts, width, ConcatLayer{}});
    }

    std::size_t h = x;
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string tag = "hidden" + std::to_string(k + 1);
        h = add_dense(net, tag, h, cfg.hidden[k]);
        h = net.add_layer(Layer{tag + "_relu", {h}, cfg.hidden[k], ActivationLayer{Activation::relu}});
        h = net.add_layer(Layer{tag + "_dropout", {h}, cfg.hidden[k], DropoutLayer{cfg.dropout}});
    }
    net.output = add_dense(net, "output", h, 1);
    init_cold(net, cfg.seed);
    net.check();
    return net;
}

FinetuneResult train_mlp_baseline(const Dataset& train, const Dataset& valid, const MlpConfig& cfg,
                                  const TrainConfig& train_cfg) {
    return finetune(build_mlp_baseline(train, cfg), train, valid, train_cfg);
}

std::size_t mlp_parameter_count(std::size_t d, std::array<std::size_t, 2> hidden) {
    const auto [h1, h2] = hidden;
    return d * h1 + h1 + h1 * h2 + h2 + h2 + 1;
}

std::array<std::size_t, 2> mlp_hidden_for_budget(std::size_t d, std::size_t target) {
    const auto rel = [&](std::array<std::size_t, 2> h) {
        return std::abs(static_cast<double>(mlp_parameter_count(d, h)) - static_cast<double>(target)) /
               static_cast<double>(std::max<std::size_t>(target, 1));
    };
    // Equal widths: h^2 + (d + 3) h + 1 = target.
    const double b = static_cast<double>(d) + 3.0;
    const double root = (-b + std::sqrt(b * b + 4.0 * (static_cast<double>(target) - 1.0))) / 2.0;
    std::array<std::size_t, 2> best{1, 1};
    for (double c : {std::floor(root), std::ceil(root)}) {
        const auto h = static_cast<std::size_t>(std::max(1.0, c));
        if (rel({h, h}) < rel(best)) best = {h, h};
    }
    if (rel(best) <= 0.1) return best;
    // Otherwise search h2 and solve for h1.
    for (std::size_t h2 = 1; h2 <= 4096; ++h2) {
        const double h1 = (static_cast<double>(target) - 2.0 * static_cast<double>(h2) - 1.0) /
                          (static_cast<double>(d) + 1.0 + static_cast<double>(h2));
        for (double c : {std::floor(h1), std::ceil(h1)}) {
            const auto w = static_cast<std::size_t>(std::max(1.0, c));
            if (rel({w, h2}) < rel(best)) best = {w, h2};
        }
    }
    return best;
}

}  // namespace pipegrad
