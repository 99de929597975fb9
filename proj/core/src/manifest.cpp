#include "pathcast/manifest.hpp"

#include <json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

void RunManifest::add_input(const std::string& path) {
  input_hashes[path] = to_hex(hash_file(path));
}

void RunManifest::add_output(const std::string& path) {
  output_hashes[path] = to_hex(hash_file(path));
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["artifact_version"] = artifact_version;
  j["format_version"] = format_version;
  j["seed"] = seed;
  auto cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.entries()) cfg[k] = v;
  j["config"] = cfg;
  auto inputs = nlohmann::ordered_json::object();
  for (const auto& [k, v] : input_hashes) inputs[k] = v;
  j["inputs"] = inputs;
  auto outputs = nlohmann::ordered_json::object();
  for (const auto& [k, v] : output_hashes) outputs[k] = v;
  j["outputs"] = outputs;
  j["wall_ms"] = wall_ms;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const { write_text_file(path, to_json()); }

}  // namespace pathcast
