#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pipegrad/data.hpp"
#include "pipegrad/network.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

// train: sigmoids + dropout; eval: sigmoids, no dropout; hard: unit steps
// inside tree blocks, no dropout (exact tree semantics).
enum class Mode { train, eval, hard };

// Forward-pass caches needed by backward().
struct Trace {
    struct TreeCache {
        Eigen::MatrixXd d;      // decision activations, batch x internal
        Eigen::MatrixXd d_grad; // derivative of the decision sigmoid w.r.t. its pre-activation
        Eigen::MatrixXd l;      // leaf activations after dropout, batch x leaves
        Eigen::MatrixXd l_grad; // derivative of the leaf sigmoid
        Eigen::MatrixXd mask;   // inverted-dropout mask (empty when dropout is off)
    };

    Mode mode = Mode::eval;
    bool valid = false;
    std::size_t batch = 0;
    std::vector<Eigen::MatrixXd> outputs;               // per layer, batch x out_dim
    std::vector<std::vector<TreeCache>> trees;          // per layer, per tree
    std::vector<std::vector<long>> embedding_rows;      // per layer, per batch row (-1 = fallback)
    std::vector<Eigen::MatrixXd> masks;                 // per dropout layer
};

// Logits (one per row) for the given dataset rows. `rng` supplies dropout
// masks and is required in train mode when any dropout is active.
Eigen::VectorXd forward(const NeuralGraph& net, const Dataset& ds, std::span<const std::size_t> rows, Mode mode,
                        Rng* rng = nullptr, Trace* trace = nullptr);

// Eval-mode (or hard-mode) logits for every row, computed in chunks.
Eigen::VectorXd predict_logits(const NeuralGraph& net, const Dataset& ds, Mode mode = Mode::eval,
                               std::size_t chunk = 4096);

// Zeroes all gradients, then accumulates d(loss)/d(param) for trainable
// parameters given d(loss)/d(logits). The trace is consumed.
void backward(NeuralGraph& net, Trace& trace, const Eigen::VectorXd& dlogits);

struct LossResult {
    double loss = 0.0;
    Eigen::VectorXd grad;  // d(mean loss)/d(logit)
};
LossResult loss_logistic(const Eigen::VectorXd& logits, std::span<const int> labels);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
    long step = 0;

    explicit AdamState(const NeuralGraph& net);
};

// Bias-corrected Adam with decoupled weight decay on trainable parameters.
void adam_step(NeuralGraph& net, AdamState& state, const AdamConfig& cfg);

}  // namespace pipegrad
