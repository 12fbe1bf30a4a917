#include "pipegrad/linear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pipegrad/error.hpp"
#include "pipegrad/random.hpp"
#include "pipegrad/detail/math.hpp"

namespace pipegrad {

using detail::sigmoid;
using detail::softplus;

namespace {

// Binary entropy, the negated conjugate of the logistic loss.
double entropy(double b) {
    double h = 0.0;
    if (b > 0.0) h -= b * std::log(b);
    if (b < 1.0) h -= (1.0 - b) * std::log1p(-b);
    return h;
}

// Root of t + z0 + q*sigmoid(t) = 0; the maximizer of the coordinate dual is sigmoid(t).
double solve_coordinate(double z0, double q) {
    double lo = -z0 - q, hi = -z0;
    double t = -z0 - q * sigmoid(-z0);
    for (int it = 0; it < 100; ++it) {
        const double s = sigmoid(t);
        const double g = t + z0 + q * s;
        if (g > 0) hi = t; else lo = t;
        const double dg = 1.0 + q * s * (1.0 - s);
        double next = t - g / dg;
        if (!(next > lo && next < hi)) next = lo + (hi - lo) / 2.0;
        if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) {
            t = next;
            break;
        }
        t = next;
    }
    return t;
}

}  // namespace

double LinearModel::predict(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(weights.size()))
        throw Error("linear model expects " + std::to_string(weights.size()) + " features, got " +
                    std::to_string(x.size()));
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += weights[static_cast<Eigen::Index>(j)] * x[j];
    return s + bias;
}

SdcaResult train_linear_sdca(const Eigen::MatrixXd& x, std::span<const int> labels, const SdcaConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (n == 0) throw Error("train_linear_sdca: zero rows");
    if (static_cast<Eigen::Index>(labels.size()) != n) throw Error("train_linear_sdca: label count does not match rows");
    if (!(cfg.regularization > 0.0)) throw Error("train_linear_sdca: regularization must be positive");

    const double lambda_n = cfg.regularization * static_cast<double>(n);
    std::vector<double> sign(static_cast<std::size_t>(n));
    std::vector<double> sq_norm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        sign[i] = labels[i] == 1 ? 1.0 : -1.0;
        sq_norm[i] = x.row(i).squaredNorm() + 1.0;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double w_bias = 0.0;
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);  // b_i = y_i * alpha_i in [0,1]

    SdcaResult result;
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(std::span<std::size_t>(order), rng);
        for (std::size_t i : order) {
            const auto row = x.row(static_cast<Eigen::Index>(i));
            const double margin = sign[i] * (row.dot(w) + w_bias);
            const double q = sq_norm[i] / lambda_n;
            const double z0 = margin - b[i] * q;
            const double b_new = sigmoid(solve_coordinate(z0, q));
            const double delta = (b_new - b[i]) * sign[i] / lambda_n;
            if (delta != 0.0) {
                w += delta * row.transpose();
                w_bias += delta;
            }
            b[i] = b_new;
        }

        double loss = 0.0, ent = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            loss += softplus(-sign[i] * (x.row(i).dot(w) + w_bias));
            ent += entropy(b[i]);
        }
        const double reg = 0.5 * cfg.regularization * (w.squaredNorm() + w_bias * w_bias);
        const double primal = loss / static_cast<double>(n) + reg;
        const double dual = ent / static_cast<double>(n) - reg;
        result.primal.push_back(primal);
        result.dual.push_back(dual);
        result.duality_gap.push_back(primal - dual);
    }
    result.model.weights = w;
    result.model.bias = w_bias;
    return result;
}

}  // namespace pipegrad
