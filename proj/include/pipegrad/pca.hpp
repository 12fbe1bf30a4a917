#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pipegrad {

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // k x d, orthonormal rows
    Eigen::VectorXd eigenvalues; // covariance eigenvalue per component

    // (x - mean) * components^T
    std::vector<double> project(std::span<const double> x) const;
};

struct PcaConfig {
    int max_iterations = 20000;
    double tolerance = 1e-14;
    std::uint64_t seed = 0;
};

// Top-k eigenvectors of the (1/n) covariance by power iteration with deflation.
PcaModel fit_pca(const Eigen::MatrixXd& x, int k, const PcaConfig& cfg = {});

}  // namespace pipegrad
