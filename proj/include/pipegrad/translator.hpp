#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "pipegrad/encoders.hpp"
#include "pipegrad/lda.hpp"
#include "pipegrad/linear.hpp"
#include "pipegrad/network.hpp"
#include "pipegrad/pca.hpp"
#include "pipegrad/pipeline.hpp"
#include "pipegrad/tree.hpp"

namespace pipegrad {

// Which tree-block parameters are trainable:
// L1 leaf values; L2 + thresholds; L3 + decision weights; L4 + conjunction layer.
enum class Level { L1 = 1, L2, L3, L4 };
enum class Start { warm, cold };

std::string to_string(Level level);
std::optional<Level> level_from_string(std::string_view name);

struct TranslationConfig {
    Level level = Level::L1;
    double gamma1 = 100.0;  // decision-layer sharpness; assumes standardized inputs
    double gamma2 = 10.0;   // conjunction-layer sharpness
    Start start = Start::warm;
    std::uint64_t cold_seed = 0;
    double dropout_p = 0.0;        // on tree leaf activations during training
    bool train_encoders = false;   // one-hot, hash and LDA tables
    std::size_t embedding_dim = 0; // hash table width; 0 means 2^bits (exact one-hot)
    bool train_dense = true;       // linear and PCA layers
    bool train_standardizer = false;

    void check() const;
};

// One tree lowered to a two-hidden-layer MLP (warm values) plus the
// trainability of each tensor at the configured level.
struct TreeMlpBlock {
    TreeLayout layout;
    Eigen::MatrixXd w1;  // internal x d, rows e_{i(n)}
    Eigen::VectorXd b1;  // -theta_n
    Eigen::MatrixXd w2;  // leaves x internal, +1 right / -1 left along the path
    Eigen::VectorXd b2;  // (#left literals) - (path length) + 0.5
    Eigen::VectorXd w3;  // leaf values
    struct Mask {
        bool w1 = false, b1 = false, w2 = false, b2 = false, w3 = true;
    } trainable;
};

TreeMlpBlock translate_tree(const Tree& tree, std::size_t num_features, const TranslationConfig& cfg);

// Standalone network over numeric inputs named f0..f{d-1}.
NeuralGraph translate_ensemble(const TreeEnsemble& ens, const TranslationConfig& cfg);

// Embedding tables as standalone parameters (warm values).
Eigen::MatrixXd onehot_table(const OneHotVocab& vocab);
Eigen::MatrixXd hash_table(int bits, std::size_t dim, std::uint64_t seed);
Eigen::MatrixXd lda_table(const LdaModel& model);

// Dense lowering of arithmetic operators: y = x W^T + b.
struct DenseInit {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};
DenseInit translate_linear(const LinearModel& m);
DenseInit translate_pca(const PcaModel& m);
// Elementwise scale and shift of a standardizer.
DenseInit translate_standardizer(const StandardizeOp& op);

NeuralGraph translate_pipeline(const Pipeline& pipeline, const TranslationConfig& cfg);

// Resamples every trainable parameter from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_cold(NeuralGraph& net, std::uint64_t seed);

}  // namespace pipegrad
