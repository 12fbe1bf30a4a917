#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pipegrad/data.hpp"
#include "pipegrad/network.hpp"

namespace pipegrad {

struct TrainConfig {
    std::size_t batch_size = 256;
    double lr = 1e-3;
    double weight_decay = 0.0;
    int max_epochs = 20;
    int patience = 10;         // evaluations without improvement before stopping
    std::uint64_t seed = 0;
    std::size_t eval_every = 0; // optimizer steps between evaluations; 0 = once per epoch
};

struct HistoryEntry {
    std::size_t step = 0;
    double loss = 0.0;      // mean training loss since the previous evaluation
    double valid_auc = 0.0;
};

struct FinetuneResult {
    NeuralGraph net;  // parameters of the best validation evaluation
    std::vector<HistoryEntry> history;
    double best_valid_auc = 0.0;
    std::size_t best_step = 0;
    std::size_t steps = 0;
};

// Minibatch Adam on the mean logistic loss with early stopping on validation
// AUC. The step-0 history entry holds the untrained network; its loss is the
// eval-mode loss over the training set. Throws DivergenceError on a
// non-finite loss.
FinetuneResult finetune(const NeuralGraph& net, const Dataset& train, const Dataset& valid, const TrainConfig& cfg);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryEntry>& history);

}  // namespace pipegrad
