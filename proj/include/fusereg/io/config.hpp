#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fusereg/errors.hpp"

namespace fusereg {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace detail

/// Flat key-value configuration: "key = value" lines with '#' comments in a
/// file, overridable by "--key value" command-line flags (flags win).
class RunConfig {
 public:
  RunConfig() = default;

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const std::string trimmed = detail::trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ValidationError(path + " line " + std::to_string(line_no) +
                              ": expected 'key = value'");
      const std::string key = detail::trim(std::string_view(trimmed).substr(0, eq));
      const std::string value = detail::trim(std::string_view(trimmed).substr(eq + 1));
      if (key.empty())
        throw ValidationError(path + " line " + std::to_string(line_no) + ": empty key");
      values_[key] = value;
    }
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Parses "--key value" pairs from argv[start..). A "--config FILE" flag is
  /// applied first so other flags override file entries.
  static RunConfig from_args(int argc, char** argv, int start) {
    std::vector<std::pair<std::string, std::string>> flags;
    std::string config_path;
    for (int i = start; i < argc; ++i) {
      std::string arg = argv[i];
      if (arg.rfind("--", 0) != 0)
        throw ValidationError("unexpected argument '" + arg + "' (flags are --key value)");
      arg = arg.substr(2);
      if (i + 1 >= argc) throw ValidationError("flag --" + arg + " is missing a value");
      const std::string value = argv[++i];
      if (arg == "config")
        config_path = value;
      else
        flags.emplace_back(arg, value);
    }
    RunConfig config;
    if (!config_path.empty()) config.load_file(config_path);
    for (const auto& [k, v] : flags) config.set(k, v);
    return config;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("missing required key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_number(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double v = parse_number(key, it->second);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw ValidationError("key '" + key + "' must be an integer");
    return i;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::uint64_t v = 0;
    const std::string& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ValidationError("key '" + key + "' must be a nonnegative integer");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("key '" + key + "' must be a boolean (true/false)");
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    const std::string& s = it->second;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == ',') {
        const std::string item = detail::trim(std::string_view(s).substr(start, i - start));
        if (!item.empty()) out.push_back(parse_number(key, item));
        start = i + 1;
      }
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    const std::string& s = it->second;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == ',') {
        const std::string item = detail::trim(std::string_view(s).substr(start, i - start));
        if (!item.empty()) out.push_back(item);
        start = i + 1;
      }
    }
    return out;
  }

 private:
  static double parse_number(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ValidationError("key '" + key + "' has non-numeric value '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace fusereg
