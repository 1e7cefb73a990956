#pragma once

// Minimal TOML subset for run configs: [section] headers, string values,
// arrays of strings, and booleans. All numerics travel as decimal strings and
// are converted on demand, so a config round-trips byte-for-byte.

#include "spectral/types.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tomllite {

struct Value {
  enum class Kind { string, list, boolean } kind = Kind::string;
  std::string str;
  std::vector<std::string> list;
  bool flag = false;
};

using Table = std::map<std::string, std::map<std::string, Value>>;

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] inline void fail(int line, const std::string& what) {
  throw spectral::Error(spectral::ErrorKind::invalid_argument,
                        "config line " + std::to_string(line) + ": " + what);
}

// Reads a double-quoted string starting at s[pos] == '"'; advances pos past
// the closing quote.
inline std::string read_quoted(const std::string& s, std::size_t& pos, int line) {
  if (pos >= s.size() || s[pos] != '"') fail(line, "expected opening quote");
  std::string out;
  ++pos;
  while (pos < s.size() && s[pos] != '"') {
    if (s[pos] == '\\') {
      ++pos;
      if (pos >= s.size()) fail(line, "dangling escape");
      switch (s[pos]) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: fail(line, "unsupported escape");
      }
    } else {
      out.push_back(s[pos]);
    }
    ++pos;
  }
  if (pos >= s.size()) fail(line, "unterminated string");
  ++pos;
  return out;
}

}  // namespace detail

inline Table parse(std::istream& in) {
  Table table;
  std::string current = "";
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    // Drop comments that are not inside quotes.
    std::string s;
    bool quoted = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      char c = raw[i];
      if (c == '"' && (i == 0 || raw[i - 1] != '\\')) quoted = !quoted;
      if (c == '#' && !quoted) break;
      s.push_back(c);
    }
    s = detail::strip(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') detail::fail(line, "unterminated section header");
      current = detail::strip(s.substr(1, s.size() - 2));
      if (current.empty()) detail::fail(line, "empty section name");
      table[current];
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) detail::fail(line, "expected key = value");
    std::string key = detail::strip(s.substr(0, eq));
    std::string rhs = detail::strip(s.substr(eq + 1));
    if (key.empty()) detail::fail(line, "empty key");
    if (rhs.empty()) detail::fail(line, "empty value");
    Value v;
    if (rhs.front() == '"') {
      std::size_t pos = 0;
      v.kind = Value::Kind::string;
      v.str = detail::read_quoted(rhs, pos, line);
      if (!detail::strip(rhs.substr(pos)).empty()) detail::fail(line, "trailing characters");
    } else if (rhs.front() == '[') {
      if (rhs.back() != ']') detail::fail(line, "unterminated array");
      v.kind = Value::Kind::list;
      std::string body = detail::strip(rhs.substr(1, rhs.size() - 2));
      std::size_t pos = 0;
      while (pos < body.size()) {
        while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) ++pos;
        if (pos >= body.size()) break;
        v.list.push_back(detail::read_quoted(body, pos, line));
        while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) ++pos;
        if (pos < body.size()) {
          if (body[pos] != ',') detail::fail(line, "expected comma in array");
          ++pos;
        }
      }
    } else if (rhs == "true" || rhs == "false") {
      v.kind = Value::Kind::boolean;
      v.flag = (rhs == "true");
    } else {
      detail::fail(line, "value must be a quoted string, array of strings, or boolean");
    }
    table[current][key] = v;
  }
  return table;
}

inline Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw spectral::Error(spectral::ErrorKind::invalid_argument, "cannot open config: " + path);
  return parse(in);
}

// ---- typed accessors -------------------------------------------------------

inline bool has(const Table& t, const std::string& sec, const std::string& key) {
  auto s = t.find(sec);
  return s != t.end() && s->second.count(key) > 0;
}

inline const Value& get(const Table& t, const std::string& sec, const std::string& key) {
  auto s = t.find(sec);
  if (s == t.end() || !s->second.count(key))
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          "config missing [" + sec + "] " + key);
  return s->second.at(key);
}

inline std::string get_string(const Table& t, const std::string& sec, const std::string& key,
                              const std::string& fallback) {
  if (!has(t, sec, key)) return fallback;
  const Value& v = get(t, sec, key);
  if (v.kind != Value::Kind::string)
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          "config [" + sec + "] " + key + " must be a string");
  return v.str;
}

inline bool get_bool(const Table& t, const std::string& sec, const std::string& key, bool fallback) {
  if (!has(t, sec, key)) return fallback;
  const Value& v = get(t, sec, key);
  if (v.kind != Value::Kind::boolean)
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          "config [" + sec + "] " + key + " must be true or false");
  return v.flag;
}

inline std::vector<std::string> get_list(const Table& t, const std::string& sec,
                                         const std::string& key) {
  if (!has(t, sec, key)) return {};
  const Value& v = get(t, sec, key);
  if (v.kind != Value::Kind::list)
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          "config [" + sec + "] " + key + " must be an array of strings");
  return v.list;
}

inline double parse_real(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          what + ": not a decimal number: \"" + s + "\"");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          what + ": not an integer: \"" + s + "\"");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw spectral::Error(spectral::ErrorKind::invalid_argument,
                          what + ": not an unsigned integer: \"" + s + "\"");
  return static_cast<std::uint64_t>(v);
}

}  // namespace tomllite
