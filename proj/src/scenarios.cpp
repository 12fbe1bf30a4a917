#include "pipegrad/scenarios.hpp"

#include <algorithm>

#include "pipegrad/encoders.hpp"
#include "pipegrad/error.hpp"

namespace pipegrad {

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::s1_onehot: return "s1_onehot";
        case ScenarioKind::s1_hash: return "s1_hash";
        case ScenarioKind::s1_lda: return "s1_lda";
        case ScenarioKind::s2: return "s2";
    }
    return "?";
}

std::optional<ScenarioKind> scenario_from_string(std::string_view name) {
    for (auto k : {ScenarioKind::s1_onehot, ScenarioKind::s1_hash, ScenarioKind::s1_lda, ScenarioKind::s2})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

namespace {

std::size_t encoder_width(const EncoderPayload& enc) {
    return std::visit(
        [](const auto& op) -> std::size_t {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, OneHotOp>)
                return op.vocab.cardinality();
            else if constexpr (std::is_same_v<T, HashEncodeOp>)
                return std::size_t{1} << op.bits;
            else
                return static_cast<std::size_t>(op.model.topics());
        },
        enc);
}

// Single-leaf placeholder standing in for a model that is not trained yet.
TreeEnsemble placeholder_ensemble(std::size_t num_features) {
    TreeEnsemble e;
    e.num_features = num_features;
    e.trees.push_back(Tree{{TreeNode::leaf(0.0)}, 0});
    return e;
}

LinearModel placeholder_linear(std::size_t dim) {
    return LinearModel{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), 0.0};
}

// Output of the node feeding `consumer` over the whole dataset.
Eigen::MatrixXd upstream_of(const PipelineGraph& g, const Dataset& ds, std::string_view consumer) {
    const std::string input = g.node(consumer).inputs.at(0);
    return node_output_matrix(validate(g), ds, input);
}

NumericFront fit_numeric_front(const Dataset& train, const std::vector<std::string>& columns) {
    NumericFront front;
    front.columns = columns;
    for (const auto& c : columns) {
        const Standardizer s = fit_standardizer(train.numeric(c));
        front.standardizer.mean.push_back(s.mean);
        front.standardizer.scale.push_back(s.scale);
    }
    return front;
}

std::vector<EncoderPayload> fit_encoders(const Dataset& train, const ScenarioConfig& cfg,
                                         const std::vector<std::string>& categorical) {
    std::vector<EncoderPayload> out;
    for (const auto& c : categorical) {
        switch (cfg.kind) {
            case ScenarioKind::s1_hash:
                if (cfg.hash_bits < 1 || cfg.hash_bits > 30) throw ConfigError("hash_bits must lie in [1, 30]");
                out.emplace_back(HashEncodeOp{c, cfg.hash_bits});
                break;
            case ScenarioKind::s1_lda: {
                std::vector<std::string> companions;
                for (const auto& other : categorical)
                    if (other != c) companions.push_back(other);
                if (companions.empty())
                    throw ConfigError("s1_lda needs at least two categorical columns (documents and tokens)");
                out.emplace_back(LdaOp{c, fit_lda_for_column(train, c, companions, cfg.lda)});
                break;
            }
            default: out.emplace_back(OneHotOp{c, fit_onehot(train.categorical(c))}); break;
        }
    }
    return out;
}

std::vector<std::size_t> count_select_indices(const Eigen::MatrixXd& x, std::size_t min_count) {
    std::vector<std::size_t> keep;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (static_cast<std::size_t>((x.col(j).array() != 0.0).count()) >= min_count)
            keep.push_back(static_cast<std::size_t>(j));
    if (keep.empty()) throw Error("count selector dropped every feature dimension");
    return keep;
}

}  // namespace

Pipeline fit_scenario(const Dataset& train, const ScenarioConfig& cfg) {
    if (train.rows() == 0) throw Error("cannot fit a scenario on an empty training set");
    const auto numeric = cfg.numeric.empty() ? train.numeric_names() : cfg.numeric;
    const auto categorical = cfg.categorical.empty() ? train.categorical_names() : cfg.categorical;
    const std::span<const int> labels = train.labels();

    const NumericFront front = fit_numeric_front(train, numeric);
    const std::vector<EncoderPayload> encoders = fit_encoders(train, cfg, categorical);
    std::size_t width = numeric.size();
    for (const auto& e : encoders) width += encoder_width(e);

    std::optional<std::vector<std::size_t>> selected;
    if (cfg.kind == ScenarioKind::s1_hash && cfg.count_select_min > 0) {
        const Eigen::MatrixXd x =
            upstream_of(build_scenario1({front, encoders, std::nullopt, placeholder_ensemble(width)}), train,
                        node_ids::gbdt);
        selected = count_select_indices(x, cfg.count_select_min);
        width = selected->size();
    }

    if (cfg.kind != ScenarioKind::s2) {
        Scenario1Parts parts{front, encoders, selected, placeholder_ensemble(width)};
        const Eigen::MatrixXd x = upstream_of(build_scenario1(parts), train, node_ids::gbdt);
        parts.gbdt = train_gbdt(x, labels, cfg.gbdt);
        return validate(build_scenario1(parts));
    }

    const int k = std::min<int>(cfg.pca_k, static_cast<int>(std::min<std::size_t>(width, train.rows())));
    if (k < 1) throw ConfigError("pca_k must be at least 1");
    Scenario2Parts parts{front, encoders, selected, PcaModel{}, placeholder_ensemble(static_cast<std::size_t>(k)),
                         placeholder_linear(1 + width)};
    // PCA on the feature front.
    parts.pca.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    parts.pca.components = Eigen::MatrixXd::Identity(k, static_cast<Eigen::Index>(width));
    const Eigen::MatrixXd x = upstream_of(build_scenario2(parts), train, node_ids::pca);
    parts.pca = fit_pca(x, k, cfg.pca);
    // GBDT on the principal components.
    const Eigen::MatrixXd z = upstream_of(build_scenario2(parts), train, node_ids::gbdt);
    parts.gbdt = train_gbdt(z, labels, cfg.gbdt);
    // Linear model on leaf indicators concatenated with the features.
    parts.linear = placeholder_linear(parts.gbdt.total_leaves() + width);
    const Eigen::MatrixXd s = upstream_of(build_scenario2(parts), train, node_ids::linear);
    parts.linear = train_linear_sdca(s, labels, cfg.sdca).model;
    return validate(build_scenario2(parts));
}

}  // namespace pipegrad
