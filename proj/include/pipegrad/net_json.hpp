#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pipegrad/network.hpp"

namespace pipegrad {

inline constexpr std::string_view kNetVersion = "pipegrad.net/1";

nlohmann::ordered_json serialize(const NeuralGraph& net);
// Parses and runs NeuralGraph::check().
NeuralGraph deserialize_net(const nlohmann::ordered_json& doc);

void save_net(const std::filesystem::path& path, const NeuralGraph& net);
NeuralGraph load_net(const std::filesystem::path& path);

}  // namespace pipegrad
