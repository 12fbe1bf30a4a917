#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipegrad/data.hpp"
#include "pipegrad/network.hpp"
#include "pipegrad/pipeline.hpp"
#include "pipegrad/runtime.hpp"

namespace pipegrad {

// Mann-Whitney AUC with average ranks for tied scores.
double auc(std::span<const double> scores, std::span<const int> labels);
double log_loss(std::span<const double> logits, std::span<const int> labels);
double accuracy(std::span<const double> logits, std::span<const int> labels);

struct FidelityReport {
    std::size_t rows_checked = 0;
    std::size_t hard_mismatches = 0;
    std::size_t rows_excluded = 0;           // within `margin` of a threshold
    std::vector<std::size_t> excluded_rows;  // first few excluded row indices
    double max_soft_abs_deviation = 0.0;     // eval mode vs pipeline, over included rows
    double min_margin_seen = 0.0;            // smallest distance of a tree input to any threshold
    double max_hard_abs_deviation = 0.0;
};

// Compares the network (hard mode and eval mode) against the reference
// pipeline on every row of `ds`. Both sides are compared as logits, or as
// probabilities when the pipeline ends in a sigmoid.
FidelityReport fidelity_check(const Pipeline& pipeline, const NeuralGraph& net, const Dataset& ds, double margin);

// Hard-mode disagreement rule: |a - b| > 1e-9 * max(|a|, |b|, 1).
bool scores_differ(double a, double b);

struct GradientCoordinate {
    std::string param;
    std::size_t index = 0;  // column-major offset inside the parameter
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradientCheckResult {
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
    std::string worst_param;  // id of the parameter holding the worst coordinate
    std::vector<GradientCoordinate> samples;
};

// Central differences of the mean logistic loss on `sample` random trainable
// coordinates, accumulated per row. Runs eval mode (dropout off); hard mode is
// rejected. The error of a coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
GradientCheckResult gradient_check(NeuralGraph& net, const Dataset& ds, std::span<const std::size_t> rows, double h,
                                   std::size_t sample, std::uint64_t seed, Mode mode = Mode::eval);

struct ParamCount {
    struct Entry {
        std::string layer;
        std::size_t count = 0;
    };
    std::vector<Entry> per_layer;  // counted per the trainable_only flag
    std::size_t total_trainable = 0;
    std::size_t total_all = 0;
};
ParamCount count_parameters(const NeuralGraph& net, bool trainable_only = true);

nlohmann::ordered_json to_json(const FidelityReport& r);
nlohmann::ordered_json to_json(const ParamCount& c);

}  // namespace pipegrad
