#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pipegrad/data.hpp"
#include "pipegrad/tree.hpp"

namespace pipegrad {

// Bundled tabular task: numeric x0 (unstandardized, mean 5) and x1, categorical
// c0 (8 values) and c1 (6 values). Labels are Bernoulli draws around a planted
// tree over (x0, x1, c1) plus a per-category effect of c0 and a smooth oblique term.
struct FixtureConfig {
    std::size_t rows = 4000;
    std::uint64_t seed = 0;
};
Dataset make_fixture(const FixtureConfig& cfg);
SchemaFile fixture_schema();

// Labels come from a depth-3 tree over four N(0, 1) columns z0..z3.
struct PlantedTreeTask {
    Tree truth;  // features index z0..z3, leaf values are the 0/1 labels
    Dataset data;
};
PlantedTreeTask make_planted_tree_task(std::size_t rows, std::uint64_t seed);
// Flips each label with probability `rate`.
Dataset with_label_noise(const Dataset& ds, double rate, std::uint64_t seed);

}  // namespace pipegrad
