#include "pipegrad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pipegrad/detail/math.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw Error("metric: " + std::to_string(a) + " scores but " + std::to_string(b) + " labels");
}

// Distance from x to the nearest threshold of any internal node of the ensemble.
double ensemble_margin(const TreeEnsemble& ens, const std::vector<double>& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : ens.trees)
        for (const auto& node : t.nodes)
            if (!node.is_leaf)
                best = std::min(best, std::abs(x[static_cast<std::size_t>(node.feature)] - node.threshold));
    return best;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_lengths(scores.size(), labels.size());
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (int y : labels) pos += y == 1 ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw Error("auc needs both classes, got a single-class label set");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        // ranks are 1-based; tied block i..j shares their mean
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum += rank;
        i = j + 1;
    }
    const double p = static_cast<double>(pos);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

double log_loss(std::span<const double> logits, std::span<const int> labels) {
    check_lengths(logits.size(), labels.size());
    if (logits.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        total += detail::softplus(logits[i]) - logits[i] * labels[i];
    return total / static_cast<double>(logits.size());
}

double accuracy(std::span<const double> logits, std::span<const int> labels) {
    check_lengths(logits.size(), labels.size());
    if (logits.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) hits += (logits[i] > 0.0) == (labels[i] == 1) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(logits.size());
}

bool scores_differ(double a, double b) {
    return std::abs(a - b) > 1e-9 * std::max({std::abs(a), std::abs(b), 1.0});
}

FidelityReport fidelity_check(const Pipeline& pipeline, const NeuralGraph& net, const Dataset& ds, double margin) {
    FidelityReport rep;
    rep.rows_checked = ds.rows();
    rep.min_margin_seen = std::numeric_limits<double>::infinity();
    const Eigen::VectorXd hard = predict_logits(net, ds, Mode::hard);
    const Eigen::VectorXd soft = predict_logits(net, ds, Mode::eval);
    const auto& nodes = pipeline.graph().nodes;
    auto score = [&](double logit) { return net.sink_sigmoid ? detail::sigmoid(logit) : logit; };

    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto outs = pipeline_execute(pipeline, ds, r);
        double row_margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (const auto* op = std::get_if<TreeEnsembleOp>(&nodes[i].payload))
                row_margin = std::min(row_margin, ensemble_margin(op->ensemble, outs[pipeline.input_indices()[i][0]]));
        rep.min_margin_seen = std::min(rep.min_margin_seen, row_margin);

        const double ref = outs[pipeline.sink_index()][0];
        const auto ri = static_cast<Eigen::Index>(r);
        const double h = score(hard(ri));
        if (row_margin <= margin) {
            ++rep.rows_excluded;
            if (rep.excluded_rows.size() < 20) rep.excluded_rows.push_back(r);
            continue;
        }
        rep.max_hard_abs_deviation = std::max(rep.max_hard_abs_deviation, std::abs(h - ref));
        if (scores_differ(h, ref)) ++rep.hard_mismatches;
        rep.max_soft_abs_deviation = std::max(rep.max_soft_abs_deviation, std::abs(score(soft(ri)) - ref));
    }
    return rep;
}

namespace {
// Denominator floor of the relative error; only guards against 0/0.
constexpr double kGradientFloor = 1e-12;
}  // namespace

GradientCheckResult gradient_check(NeuralGraph& net, const Dataset& ds, std::span<const std::size_t> rows, double h,
                                   std::size_t sample, std::uint64_t seed, Mode mode) {
    if (mode == Mode::hard) throw Error("non-differentiable mode");
    if (mode == Mode::train) throw Error("gradient check needs a deterministic forward pass; use eval mode");
    if (rows.empty()) throw Error("gradient check needs a nonempty batch");
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) labels.push_back(ds.labels()[r]);

    Trace trace;
    const Eigen::VectorXd logits = forward(net, ds, rows, mode, nullptr, &trace);
    backward(net, trace, loss_logistic(logits, labels).grad);

    std::vector<std::pair<std::size_t, Eigen::Index>> coords;
    for (std::size_t p = 0; p < net.params.size(); ++p)
        if (net.params[p].trainable)
            for (Eigen::Index k = 0; k < net.params[p].value.size(); ++k) coords.emplace_back(p, k);
    Rng rng(seed);
    const std::size_t take = std::min(sample, coords.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(coords[i], coords[i + uniform_index(rng, coords.size() - i)]);

    // The loss difference is accumulated row by row, so rows whose logit does
    // not move contribute exactly zero instead of the rounding noise of the
    // full mean loss.
    auto row_loss = [](double z, int y) { return detail::softplus(z) - z * y; };
    const double inv = 1.0 / static_cast<double>(rows.size());
    GradientCheckResult res;
    res.coordinates = take;
    for (std::size_t i = 0; i < take; ++i) {
        auto [p, k] = coords[i];
        double& v = net.params[p].value.data()[k];
        const double saved = v;
        v = saved + h;
        const Eigen::VectorXd up = forward(net, ds, rows, mode);
        v = saved - h;
        const Eigen::VectorXd down = forward(net, ds, rows, mode);
        v = saved;
        double diff = 0.0;
        for (Eigen::Index r = 0; r < up.size(); ++r)
            if (up(r) != down(r)) diff += row_loss(up(r), labels[r]) - row_loss(down(r), labels[r]);
        const double numeric = diff * inv / (2.0 * h);
        const double analytic = net.params[p].grad.data()[k];
        const double err =
            std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradientFloor});
        res.samples.push_back({net.params[p].id, static_cast<std::size_t>(k), analytic, numeric, err});
        if (res.worst_param.empty() || err > res.max_rel_error) {
            res.max_rel_error = err;
            res.worst_param = net.params[p].id;
        }
    }
    return res;
}

ParamCount count_parameters(const NeuralGraph& net, bool trainable_only) {
    ParamCount c;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto ps = net.layer_params(i);
        if (ps.empty()) continue;
        ParamCount::Entry e{net.layers[i].id, 0};
        for (std::size_t p : ps) {
            const std::size_t size = net.params[p].size();
            c.total_all += size;
            if (net.params[p].trainable) c.total_trainable += size;
            if (!trainable_only || net.params[p].trainable) e.count += size;
        }
        c.per_layer.push_back(std::move(e));
    }
    return c;
}

nlohmann::ordered_json to_json(const FidelityReport& r) {
    nlohmann::ordered_json j;
    j["rows_checked"] = r.rows_checked;
    j["hard_mismatches"] = r.hard_mismatches;
    j["rows_excluded"] = r.rows_excluded;
    j["excluded_rows"] = r.excluded_rows;
    j["max_hard_abs_deviation"] = r.max_hard_abs_deviation;
    j["max_soft_abs_deviation"] = r.max_soft_abs_deviation;
    if (std::isfinite(r.min_margin_seen))
        j["min_margin_seen"] = r.min_margin_seen;
    else
        j["min_margin_seen"] = nullptr;
    return j;
}

nlohmann::ordered_json to_json(const ParamCount& c) {
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& e : c.per_layer) layers.push_back({{"layer", e.layer}, {"count", e.count}});
    return {{"total_trainable", c.total_trainable}, {"total_all", c.total_all}, {"per_layer", std::move(layers)}};
}

}  // namespace pipegrad
