#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tabom {

/// Flat `section.key = value` config. Lines starting with '#' are comments.
/// Lookups throw std::invalid_argument naming the missing or malformed key.
struct Config {
  std::map<std::string, std::string> values;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  /// "key=value" as passed to --set; later overrides win.
  void apply_override(const std::string& kv);

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  long long integer(const std::string& key) const;
  long long integer(const std::string& key, long long fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  /// Comma-separated list, whitespace trimmed, empty entries dropped.
  std::vector<std::string> list(const std::string& key) const;

  /// Sorted key=value lines; the manifest hashes this.
  std::string canonical() const;
};

std::uint64_t fnv1a64(const std::string& s);

}  // namespace tabom
