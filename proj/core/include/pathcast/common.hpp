#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pathcast {

// Bad or missing input data (unparseable records, unknown ids, schema violations).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid command-line or configuration usage.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure (non-finite values, domain errors, shape mismatches).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

// 64-bit mixer, used to derive sub-seeds.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);
std::uint64_t hash_file(const std::string& path);

}  // namespace pathcast
