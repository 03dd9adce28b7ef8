#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace xanchor {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI run, written next to its outputs.
struct RunManifest {
  std::string subcommand;
  nlohmann::json flags = nlohmann::json::object();  ///< every resolved option
  std::map<std::string, std::string> inputs;   ///< path -> "sha256:<hex>"
  std::map<std::string, std::string> outputs;  ///< path -> "sha256:<hex>"
  std::uint64_t seed = 0;
  std::string tool_version;
  double wall_time_seconds = 0.0;
  int exit_code = 0;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

/// "<output>.manifest.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace xanchor
