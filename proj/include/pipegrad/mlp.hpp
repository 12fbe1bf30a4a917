#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "pipegrad/data.hpp"
#include "pipegrad/finetune.hpp"
#include "pipegrad/network.hpp"

namespace pipegrad {

struct MlpConfig {
    std::array<std::size_t, 2> hidden{64, 32};
    double dropout = 0.1;
    std::uint64_t seed = 0;
};

// Frozen input front (standardized numeric columns, identity one-hot tables
// fitted on `train`) followed by Dense-ReLU-Dropout x2 and a one-unit output.
// Hidden and output layers are randomly initialized and trainable.
NeuralGraph build_mlp_baseline(const Dataset& train, const MlpConfig& cfg);

FinetuneResult train_mlp_baseline(const Dataset& train, const Dataset& valid, const MlpConfig& cfg,
                                  const TrainConfig& train_cfg);

// d*h1 + h1 + h1*h2 + h2 + h2 + 1
std::size_t mlp_parameter_count(std::size_t input_dim, std::array<std::size_t, 2> hidden);

// Hidden sizes whose trainable count is closest to `target`, preferring
// equal widths when they land within 10%.
std::array<std::size_t, 2> mlp_hidden_for_budget(std::size_t input_dim, std::size_t target);

// Width of the frozen input front build_mlp_baseline would create.
std::size_t mlp_input_dim(const Dataset& train);

}  // namespace pipegrad
