#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipegrad/data.hpp"
#include "pipegrad/gbdt.hpp"
#include "pipegrad/lda.hpp"
#include "pipegrad/linear.hpp"
#include "pipegrad/pca.hpp"
#include "pipegrad/pipeline.hpp"

namespace pipegrad {

enum class ScenarioKind { s1_onehot, s1_hash, s1_lda, s2 };

std::string to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_from_string(std::string_view name);

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::s1_onehot;
    // Empty lists mean every column of that kind in the dataset.
    std::vector<std::string> numeric;
    std::vector<std::string> categorical;
    GbdtConfig gbdt;
    int hash_bits = 10;
    // Count selector after hashing: keep dimensions with at least this many
    // nonzero training entries. 0 disables the selector.
    std::size_t count_select_min = 1;
    LdaConfig lda;
    int pca_k = 8;
    PcaConfig pca;
    SdcaConfig sdca;
};

// Trains every operator of the scenario on `train`, one at a time in
// topological order, each on the outputs of the already-trained upstream part.
Pipeline fit_scenario(const Dataset& train, const ScenarioConfig& cfg);

}  // namespace pipegrad
