#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pathcast/kvconfig.hpp"

namespace pathcast {

// Reproducibility record written next to each command's primary output.
// Identical inputs, config, and seed must yield identical input/output
// hashes; wall time is informational only.
struct RunManifest {
  std::string command;
  KvConfig config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;   // path -> fnv64 hex
  std::map<std::string, std::string> output_hashes;  // path -> fnv64 hex
  std::int64_t wall_ms = 0;
  std::string artifact_version = "0.1.0";
  int format_version = 1;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  std::string to_json() const;
  void write(const std::string& path) const;
};

}  // namespace pathcast
