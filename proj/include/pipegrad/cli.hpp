#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pipegrad {

// Exit codes of the pipegrad executable.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitFidelity = 4;

// Reads a JSON config and applies `key=value` overrides. Keys are dotted
// paths; values parse as JSON when possible and fall back to strings.
nlohmann::ordered_json load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);
void apply_override(nlohmann::ordered_json& config, const std::string& assignment);

// Entry point of the executable; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pipegrad
