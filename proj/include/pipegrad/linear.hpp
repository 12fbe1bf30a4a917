#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pipegrad {

struct LinearModel {
    Eigen::VectorXd weights;
    double bias = 0.0;

    double predict(std::span<const double> x) const;
};

struct SdcaConfig {
    double regularization = 1e-4;  // lambda in (lambda/2)|w|^2
    int epochs = 20;
    std::uint64_t seed = 0;
};

struct SdcaResult {
    LinearModel model;
    std::vector<double> duality_gap;  // one entry per epoch, after the epoch
    std::vector<double> primal;
    std::vector<double> dual;
};

// L2-regularized logistic regression by stochastic dual coordinate ascent.
// The bias is learned as the weight of an implicit constant-1 feature and is
// regularized like every other weight.
SdcaResult train_linear_sdca(const Eigen::MatrixXd& x, std::span<const int> labels, const SdcaConfig& cfg);

}  // namespace pipegrad
