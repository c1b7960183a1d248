#ifndef GNNCTRL_KVCONFIG_HPP
#define GNNCTRL_KVCONFIG_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gnnctrl/errors.hpp"

namespace gnnctrl {

/// Plain key=value configuration: one pair per line, '#' starts a comment,
/// whitespace around keys/values ignored. Later assignments win, so CLI
/// overrides are just `set` calls on top of a parsed file.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_string(const std::string& text) {
    KvConfig kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw config_error("config line " + std::to_string(lineno) + ": expected key=value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string val = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw config_error("config line " + std::to_string(lineno) + ": empty key");
      kv.values_[key] = val;
    }
    return kv;
  }

  static KvConfig from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return from_string(buf.str());
  }

  void set(const std::string& key, const std::string& val) { values_[key] = val; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  long get_int(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const long v = std::stol(it->second, &used);
      if (used != it->second.size()) throw config_error("");
      return v;
    } catch (...) {
      throw config_error("config key '" + key + "': '" + it->second + "' is not an integer");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw config_error("");
      return v;
    } catch (...) {
      throw config_error("config key '" + key + "': '" + it->second + "' is not a number");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw config_error("config key '" + key + "': '" + it->second + "' is not a boolean");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace gnnctrl

#endif  // GNNCTRL_KVCONFIG_HPP
