#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "pipegrad/data.hpp"
#include "pipegrad/tree.hpp"

namespace pipegrad {

struct GbdtConfig {
    int num_trees = 100;
    int max_leaves = 30;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    double hessian_floor = 1e-6;
    int min_samples_leaf = 1;
    double l2 = 0.0;
};

// Binary logistic gradient boosting with leaf-wise growth and exact split
// search. Rows of `x` are samples.
TreeEnsemble train_gbdt(const Eigen::MatrixXd& x, std::span<const int> labels, const GbdtConfig& cfg);

// Numeric columns of `ds` in schema order as a rows x cols matrix.
Eigen::MatrixXd numeric_matrix(const Dataset& ds);

}  // namespace pipegrad
