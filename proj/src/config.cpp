#include "tabom/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tabom {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
    c.values[key] = val;
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

void Config::apply_override(const std::string& kv) {
  size_t eq = kv.find('=');
  if (eq == std::string::npos || trim(kv.substr(0, eq)).empty())
    throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
  values[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
}

bool Config::has(const std::string& key) const { return values.count(key) > 0; }

std::string Config::str(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw std::invalid_argument("config: missing key '" + key + "'");
  return it->second;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

long long Config::integer(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t used = 0;
    long long out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing junk");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not an integer: '" + v + "'");
  }
}

long long Config::integer(const std::string& key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

double Config::real(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing junk");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: '" + v + "'");
  }
}

double Config::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::string> Config::list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(str(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace tabom
