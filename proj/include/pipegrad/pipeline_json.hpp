#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pipegrad/pipeline.hpp"

namespace pipegrad {

inline constexpr std::string_view kPipelineVersion = "pipegrad.pipeline/1";

nlohmann::ordered_json serialize(const Pipeline& pipeline);
// Parses and validates.
Pipeline deserialize_pipeline(const nlohmann::ordered_json& doc);

void save_pipeline(const std::filesystem::path& path, const Pipeline& pipeline);
Pipeline load_pipeline(const std::filesystem::path& path);

// Shared by both checkpoint formats.
nlohmann::ordered_json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json ensemble_to_json(const TreeEnsemble& ens);
TreeEnsemble ensemble_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& doc);

}  // namespace pipegrad
