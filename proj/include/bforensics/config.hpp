#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "bforensics/errors.hpp"

namespace bforensics {

// Flat key = value configuration with TOML-style [section] headers; a key
// under [embed] is stored as "embed.<key>". Values may be quoted. '#' starts a
// comment outside quotes.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>") {
    Config c;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      line = trim(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
      if (c.values_.count(full)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key " + full);
      c.values_[full] = unquote(trim(line.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text, path);
  }

  // "key=value" from the command line; replaces any file value.
  void set_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || trim(assignment.substr(0, eq)).empty()) {
      throw ConfigError("override \"" + std::string(assignment) + "\" is not key=value");
    }
    values_[std::string(trim(assignment.substr(0, eq)))] = unquote(trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::optional<std::string> find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const { return find(key).value_or(fallback); }

  std::string require_string(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ConfigError("missing required config key \"" + key + "\"");
    return *v;
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    auto v = find(key);
    return v ? convert<T>(key, *v) : fallback;
  }

  template <class T>
  T require(const std::string& key) const {
    return convert<T>(key, require_string(key));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError("config key \"" + key + "\": expected true or false, got \"" + *v + "\"");
  }

  // Throws on any key not in `known` (catches typos).
  void check_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      if (!known.count(k)) throw ConfigError("unknown config key \"" + k + "\"");
    }
  }

 private:
  std::map<std::string, std::string> values_;

  template <class T>
  static T convert(const std::string& key, const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      throw ConfigError("config key \"" + key + "\": cannot parse \"" + v + "\"");
    }
    return out;
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

  static std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
  }
};

}  // namespace bforensics
