#include "pipegrad/pca.hpp"

#include <cmath>
#include <string>

#include "pipegrad/error.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

namespace {

void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index count) {
    for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < count; ++j) v -= basis.row(j).dot(v) * basis.row(j).transpose();
}

// Any unit vector orthogonal to the first `count` rows of `basis`.
Eigen::VectorXd orthogonal_complement_vector(const Eigen::MatrixXd& basis, Eigen::Index count, Eigen::Index d) {
    Eigen::VectorXd best;
    double best_norm = -1.0;
    for (Eigen::Index e = 0; e < d; ++e) {
        Eigen::VectorXd v = Eigen::VectorXd::Unit(d, e);
        orthogonalize(v, basis, count);
        if (v.norm() > best_norm) {
            best_norm = v.norm();
            best = v;
        }
    }
    return best / best_norm;
}

void canonical_sign(Eigen::VectorXd& v) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
}

}  // namespace

std::vector<double> PcaModel::project(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(mean.size()))
        throw Error("pca expects " + std::to_string(mean.size()) + " features, got " + std::to_string(x.size()));
    Eigen::VectorXd centered(mean.size());
    for (Eigen::Index j = 0; j < mean.size(); ++j) centered[j] = x[static_cast<std::size_t>(j)] - mean[j];
    const Eigen::VectorXd p = components * centered;
    return {p.data(), p.data() + p.size()};
}

PcaModel fit_pca(const Eigen::MatrixXd& x, int k, const PcaConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (k < 1 || k > std::min<Eigen::Index>(n, d))
        throw Error("fit_pca: k=" + std::to_string(k) + " out of range [1, " + std::to_string(std::min(n, d)) + "]");

    PcaModel model;
    model.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
    Eigen::MatrixXd deflated = cov;
    const double scale = std::max(cov.trace(), 1e-300);

    model.components.resize(k, d);
    model.eigenvalues.resize(k);
    Rng rng(cfg.seed);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::VectorXd v(d);
        for (Eigen::Index j = 0; j < d; ++j) v[j] = normal(rng);
        orthogonalize(v, model.components, c);
        if (v.norm() < 1e-12) v = orthogonal_complement_vector(model.components, c, d);
        v.normalize();

        bool degenerate = false;
        for (int it = 0; it < cfg.max_iterations; ++it) {
            Eigen::VectorXd next = deflated * v;
            orthogonalize(next, model.components, c);
            const double norm = next.norm();
            if (norm <= 1e-14 * scale) {
                degenerate = true;
                break;
            }
            next /= norm;
            if (next.dot(v) < 0) next = -next;
            const double change = (next - v).norm();
            v = next;
            if (change <= cfg.tolerance) break;
        }
        if (degenerate) v = orthogonal_complement_vector(model.components, c, d);
        canonical_sign(v);
        const double eigenvalue = v.dot(cov * v);
        model.components.row(c) = v.transpose();
        model.eigenvalues[c] = eigenvalue;
        deflated -= eigenvalue * v * v.transpose();
    }
    return model;
}

}  // namespace pipegrad
