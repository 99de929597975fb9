#pragma once

#include <map>
#include <optional>
#include <string>

namespace pathcast {

// Flat key=value configuration. '#' starts a comment, blank lines are
// ignored, later assignments win. CLI flags are applied on top via set().
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path);
  static KvConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  std::string render() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pathcast
