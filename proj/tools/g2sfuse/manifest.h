#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "g2sfusion/config.h"

namespace g2sfuse {

/// Lowercase hex SHA-256 of a file's bytes. Throws g2sfusion::Error(kIoError).
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI run, written as JSON next to its outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_config(const g2sfusion::RunConfig& config);
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  /// Stamps the wall time and writes the JSON document.
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string config_ini_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, std::string>> inputs_;  // path, digest
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace g2sfuse
