#include "pipegrad/finetune.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "pipegrad/error.hpp"
#include "pipegrad/eval.hpp"
#include "pipegrad/random.hpp"
#include "pipegrad/runtime.hpp"

namespace pipegrad {

namespace {

double valid_auc(const NeuralGraph& net, const Dataset& valid) {
    const Eigen::VectorXd logits = predict_logits(net, valid, Mode::eval);
    return auc(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())), valid.labels());
}

}  // namespace

FinetuneResult finetune(const NeuralGraph& net, const Dataset& train, const Dataset& valid, const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (cfg.patience < 1) throw ConfigError("patience must be at least 1");
    if (valid.rows() == 0) throw Error("finetune needs a nonempty validation set");
    if (train.rows() == 0) throw Error("finetune needs a nonempty training set");
    net.check();

    FinetuneResult res;
    res.net = net;
    NeuralGraph work = net;
    AdamState adam(work);
    const AdamConfig opt{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
    Rng rng(cfg.seed);

    {
        const Eigen::VectorXd logits = predict_logits(work, train, Mode::eval);
        const double loss = loss_logistic(logits, train.labels()).loss;
        res.best_valid_auc = valid_auc(work, valid);
        res.history.push_back({0, loss, res.best_valid_auc});
    }

    std::vector<std::size_t> order(train.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> labels;
    std::size_t step = 0;
    int stale = 0;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    bool stop = false;

    auto evaluate = [&]() {
        const double auc_now = valid_auc(work, valid);
        res.history.push_back({step, loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0, auc_now});
        loss_sum = 0.0;
        loss_count = 0;
        if (auc_now > res.best_valid_auc) {
            res.best_valid_auc = auc_now;
            res.best_step = step;
            res.net.params = work.params;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            stop = true;
        }
    };

    for (int epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
        shuffle(std::span<std::size_t>(order), rng);
        for (std::size_t start = 0; start < order.size() && !stop; start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            labels.clear();
            for (std::size_t r : batch) labels.push_back(train.labels()[r]);

            Trace trace;
            const Eigen::VectorXd logits = forward(work, train, batch, Mode::train, &rng, &trace);
            const LossResult loss = loss_logistic(logits, labels);
            ++step;
            if (!std::isfinite(loss.loss)) throw DivergenceError("divergence at step " + std::to_string(step));
            backward(work, trace, loss.grad);
            adam_step(work, adam, opt);
            loss_sum += loss.loss;
            ++loss_count;
            if (cfg.eval_every > 0 && step % cfg.eval_every == 0) evaluate();
        }
        if (cfg.eval_every == 0 && !stop) evaluate();
    }
    if (loss_count > 0 && !stop) evaluate();
    res.steps = step;
    return res;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryEntry>& history) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "step,loss,valid_auc\n";
    char buf[96];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", h.step, h.loss, h.valid_auc);
        out << buf;
    }
}

}  // namespace pipegrad
