#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace semitc {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
/// Throws DataError if the file cannot be read.
std::string sha256_file(const std::string& path);

/// Provenance record written next to every artifact as <artifact>.manifest.json.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  std::string started_at;
  std::string finished_at;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  nlohmann::json to_json() const;
};

/// UTC time as ISO 8601 with a trailing Z.
std::string utc_timestamp();

/// Writes manifest.to_json() to <artifact>.manifest.json and returns that path.
std::string write_manifest(const std::string& artifact, const RunManifest& manifest);

}  // namespace semitc
