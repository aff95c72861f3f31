#pragma once

// Provenance record embedded in every file the CLI writes.

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gridmech/qp.hpp"

namespace gridmech::cli {

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json config);

  void add_input(const std::filesystem::path& path);
  void set_settings(const qp::Settings& s);

  /// Volatile fields (start time, wall time) sit under "timing" so payload
  /// comparisons can drop them.
  nlohmann::json to_json() const;

 private:
  std::string command_;
  nlohmann::json config_;
  std::map<std::string, std::string> inputs_;
  nlohmann::json settings_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_;
};

}  // namespace gridmech::cli
