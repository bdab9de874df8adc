#pragma once

// Run configuration and its key/value text format.
//
//   # comment
//   n = 3
//   a = [[1, 0], [2, 0], [3, 0], [4, 0]]     # complex numbers as [re, im]; plain numbers are real
//   seed = 42
//   samples = 50
//   suites = ["all"]
//   rebase = true
//   max_order = 4
//
//   [z]
//   draws = 1                                # random draws when no values are given
//   values = [[0.7, 0.3]]                    # explicit z vectors (z_1..z_{n-1})
//
//   [domain]
//   u_lo = 0.15
//   u_hi = 1.40
//   u_imag = 0.0
//
//   [tolerances]
//   global = 1e-8
//   isometry = 1e-8
//   theorem2.hoj = 1e-7
//
//   [output]
//   report = "report.json"
//   timestamp = true
//
//   [mesh]
//   u1 = [0.15, 1.4, 21]                     # lo, hi, point count
//   u2 = [0.15, 1.4, 21]
//   z = 0.5
//   output = "mesh.csv"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qdlab/checks.hpp"
#include "qdlab/core.hpp"
#include "qdlab/immersions.hpp"

namespace qdlab::cli {

struct ConfigValue {
  enum class Kind { number, string, boolean, array };
  Kind kind = Kind::number;
  double number = 0.0;
  std::string text;
  bool boolean = false;
  std::vector<ConfigValue> items;
  int line = 0;
};

struct MeshSpec {
  double u1_lo = 0.15, u1_hi = 1.40;
  int u1_count = 21;
  double u2_lo = 0.15, u2_hi = 1.40;
  int u2_count = 21;
  std::optional<Cx> z;
  std::string output;
};

struct RunConfig {
  int n = 3;
  std::vector<Cx> a;  // empty: a_j = j + 1
  std::vector<std::vector<Cx>> z_values;
  int z_draws = 1;
  SamplingDomain domain;
  std::uint64_t seed = 42;
  int samples = 50;
  Tolerances tol;
  int max_order = 4;
  std::vector<Suite> suites = default_suites();
  bool rebase = true;
  std::string report_path;
  bool timestamp = true;
  MeshSpec mesh;

  QuadricSpec quadric() const {
    if (a.empty()) return QuadricSpec::sequential(n);
    return QuadricSpec{n, a};
  }

  /// Throws ConfigError naming the offending key.
  void validate() const {
    if (n < 2 || n > kMaxJetVars) throw ConfigError("key 'n': must be in 2.." + std::to_string(kMaxJetVars));
    try {
      quadric().validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("key 'a': ") + e.what());
    }
    for (std::size_t i = 0; i < z_values.size(); ++i) {
      if (static_cast<int>(z_values[i].size()) != n - 1) {
        throw ConfigError("key 'z.values': entry " + std::to_string(i + 1) + " has " +
                          std::to_string(z_values[i].size()) + " parameters, expected n-1 = " + std::to_string(n - 1));
      }
    }
    if (z_values.empty() && z_draws < 1) throw ConfigError("key 'z.draws': must be >= 1");
    if (samples < 1) throw ConfigError("key 'samples': must be >= 1");
    if (max_order < 1 || max_order > kMaxJetOrder) {
      throw ConfigError("key 'max_order': must be in 1.." + std::to_string(kMaxJetOrder));
    }
    if (!(domain.u_lo < domain.u_hi)) throw ConfigError("keys 'domain.u_lo'/'domain.u_hi': need u_lo < u_hi");
    if (domain.u_imag < 0) throw ConfigError("key 'domain.u_imag': must be >= 0");
    if (suites.empty()) throw ConfigError("key 'suites': no suite selected");
  }
};

namespace detail {

inline std::string where(int line, std::string_view key) {
  return "config line " + std::to_string(line) + ", key '" + std::string(key) + "': ";
}

class ValueParser {
 public:
  ValueParser(std::string_view s, int line) : s_(s), line_(line) {}

  ConfigValue parse() {
    ConfigValue v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  ConfigValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    ConfigValue v;
    v.line = line_;
    const char c = s_[pos_];
    if (c == '[') {
      ++pos_;
      v.kind = ConfigValue::Kind::array;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        v.items.push_back(value());
        skip_ws();
        if (pos_ >= s_.size()) fail("unterminated array");
        if (s_[pos_] == ',') {
          ++pos_;
          skip_ws();
          if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (c == '"') {
      ++pos_;
      v.kind = ConfigValue::Kind::string;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        v.text += s_[pos_++];
      }
      if (pos_ >= s_.size()) fail("unterminated string");
      ++pos_;
      return v;
    }
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.kind = ConfigValue::Kind::boolean;
      v.boolean = true;
      return v;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.kind = ConfigValue::Kind::boolean;
      return v;
    }
    std::size_t start = pos_;
    if (s_[pos_] == '+') ++start, ++pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '-' || s_[pos_] == '+')) {
      ++pos_;
    }
    const char* first = s_.data() + start;
    const char* last = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr != last) fail("invalid value '" + std::string(first, last) + "'");
    v.kind = ConfigValue::Kind::number;
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_str = false;
  for (char c : s) {
    if (c == '"') in_str = !in_str;
    if (in_str) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

inline double as_number(const ConfigValue& v, std::string_view key) {
  if (v.kind != ConfigValue::Kind::number) throw ConfigError(where(v.line, key) + "expected a number");
  return v.number;
}

inline std::int64_t as_integer(const ConfigValue& v, std::string_view key) {
  const double d = as_number(v, key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(where(v.line, key) + "expected an integer");
  return static_cast<std::int64_t>(d);
}

inline bool as_bool(const ConfigValue& v, std::string_view key) {
  if (v.kind != ConfigValue::Kind::boolean) throw ConfigError(where(v.line, key) + "expected true or false");
  return v.boolean;
}

inline std::string as_string(const ConfigValue& v, std::string_view key) {
  if (v.kind != ConfigValue::Kind::string) throw ConfigError(where(v.line, key) + "expected a quoted string");
  return v.text;
}

inline Cx as_complex(const ConfigValue& v, std::string_view key) {
  if (v.kind == ConfigValue::Kind::number) return {v.number, 0.0};
  if (v.kind == ConfigValue::Kind::array && v.items.size() == 2 &&
      v.items[0].kind == ConfigValue::Kind::number && v.items[1].kind == ConfigValue::Kind::number) {
    return {v.items[0].number, v.items[1].number};
  }
  throw ConfigError(where(v.line, key) + "expected a complex number (a number or [re, im])");
}

inline std::vector<Cx> as_complex_list(const ConfigValue& v, std::string_view key) {
  if (v.kind != ConfigValue::Kind::array) throw ConfigError(where(v.line, key) + "expected an array");
  std::vector<Cx> out;
  for (const auto& item : v.items) out.push_back(as_complex(item, key));
  return out;
}

inline void read_range(const ConfigValue& v, std::string_view key, double& lo, double& hi, int& count) {
  if (v.kind != ConfigValue::Kind::array || v.items.size() != 3) {
    throw ConfigError(where(v.line, key) + "expected [lo, hi, count]");
  }
  lo = as_number(v.items[0], key);
  hi = as_number(v.items[1], key);
  const auto c = as_integer(v.items[2], key);
  if (c < 1 || c > 100000) throw ConfigError(where(v.line, key) + "count must be in 1..100000");
  if (c > 1 && !(lo < hi)) throw ConfigError(where(v.line, key) + "need lo < hi");
  count = static_cast<int>(c);
}

inline bool known_check(std::string_view suite, std::string_view check) {
  for (const auto& info : suite_catalog()) {
    if (suite_name(info.suite) != suite) continue;
    for (auto c : info.checks) {
      if (c == check) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Parses a selection such as "all", "isometry" or "theorem2,negative".
inline std::vector<Suite> parse_suite_list(const std::vector<std::string>& names) {
  std::vector<Suite> out;
  auto add = [&](Suite s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  for (const auto& raw : names) {
    std::stringstream ss(raw);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name = detail::trim(name);
      if (name.empty()) continue;
      if (name == "all") {
        for (Suite s : default_suites()) add(s);
        continue;
      }
      auto s = parse_suite(name);
      if (!s) throw ConfigError("unknown suite '" + name + "'");
      add(*s);
    }
  }
  return out;
}

/// Applies one tolerance override: "value", "suite=value" or "suite.check=value".
inline void apply_tolerance(Tolerances& tol, const std::string& key, double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("tolerance for '" + key + "' must be finite and >= 0");
  if (key.empty() || key == "global") {
    tol.set_global(value);
    return;
  }
  const auto dot = key.find('.');
  const std::string suite = key.substr(0, dot);
  if (!parse_suite(suite)) throw ConfigError("tolerance key '" + key + "': unknown suite '" + suite + "'");
  if (dot != std::string::npos && !detail::known_check(suite, key.substr(dot + 1))) {
    throw ConfigError("tolerance key '" + key + "': unknown check '" + key.substr(dot + 1) + "'");
  }
  tol.set(key, value);
}

inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::vector<std::string> lines;
  {
    std::string cur;
    std::stringstream ss{std::string(text)};
    while (std::getline(ss, cur)) lines.push_back(cur);
  }
  std::string section;
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    std::string line = detail::trim(detail::strip_comment(lines[i]));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> sections = {"z", "domain", "tolerances", "output", "mesh"};
      if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": missing key");
    std::string rhs = line.substr(eq + 1);
    while (detail::bracket_balance(rhs) > 0 && i + 1 < lines.size()) {
      ++i;
      rhs += "\n" + detail::strip_comment(lines[i]);
    }
    ConfigValue v = detail::ValueParser(rhs, line_no).parse();
    const std::string full = section.empty() ? key : section + "." + key;
    if (std::find(seen.begin(), seen.end(), full) != seen.end()) {
      throw ConfigError(detail::where(line_no, full) + "duplicate key");
    }
    seen.push_back(full);

    using detail::as_bool;
    using detail::as_integer;
    using detail::as_number;
    using detail::as_string;
    if (full == "n") {
      const auto n = as_integer(v, full);
      if (n < 2 || n > kMaxJetVars) throw ConfigError(detail::where(line_no, full) + "must be in 2..8");
      cfg.n = static_cast<int>(n);
    } else if (full == "a") {
      cfg.a = detail::as_complex_list(v, full);
    } else if (full == "seed") {
      const auto s = as_integer(v, full);
      if (s < 0) throw ConfigError(detail::where(line_no, full) + "must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (full == "samples") {
      const auto s = as_integer(v, full);
      if (s < 1 || s > 1000000) throw ConfigError(detail::where(line_no, full) + "must be in 1..1000000");
      cfg.samples = static_cast<int>(s);
    } else if (full == "suites") {
      std::vector<std::string> names;
      if (v.kind == ConfigValue::Kind::string) {
        names.push_back(v.text);
      } else if (v.kind == ConfigValue::Kind::array) {
        for (const auto& item : v.items) names.push_back(as_string(item, full));
      } else {
        throw ConfigError(detail::where(line_no, full) + "expected a string or an array of strings");
      }
      try {
        cfg.suites = parse_suite_list(names);
      } catch (const ConfigError& e) {
        throw ConfigError(detail::where(line_no, full) + e.what());
      }
    } else if (full == "rebase") {
      cfg.rebase = as_bool(v, full);
    } else if (full == "max_order") {
      const auto m = as_integer(v, full);
      if (m < 1 || m > kMaxJetOrder) throw ConfigError(detail::where(line_no, full) + "must be in 1..4");
      cfg.max_order = static_cast<int>(m);
    } else if (full == "z.draws") {
      const auto d = as_integer(v, full);
      if (d < 1 || d > 10000) throw ConfigError(detail::where(line_no, full) + "must be in 1..10000");
      cfg.z_draws = static_cast<int>(d);
    } else if (full == "z.values") {
      if (v.kind != ConfigValue::Kind::array) throw ConfigError(detail::where(line_no, full) + "expected an array of z vectors");
      cfg.z_values.clear();
      for (const auto& item : v.items) cfg.z_values.push_back(detail::as_complex_list(item, full));
    } else if (full == "domain.u_lo") {
      cfg.domain.u_lo = as_number(v, full);
    } else if (full == "domain.u_hi") {
      cfg.domain.u_hi = as_number(v, full);
    } else if (full == "domain.u_imag") {
      cfg.domain.u_imag = as_number(v, full);
    } else if (section == "tolerances") {
      try {
        apply_tolerance(cfg.tol, key, as_number(v, full));
      } catch (const ConfigError& e) {
        throw ConfigError(detail::where(line_no, full) + e.what());
      }
    } else if (full == "output.report") {
      cfg.report_path = as_string(v, full);
    } else if (full == "output.timestamp") {
      cfg.timestamp = as_bool(v, full);
    } else if (full == "mesh.u1") {
      detail::read_range(v, full, cfg.mesh.u1_lo, cfg.mesh.u1_hi, cfg.mesh.u1_count);
    } else if (full == "mesh.u2") {
      detail::read_range(v, full, cfg.mesh.u2_lo, cfg.mesh.u2_hi, cfg.mesh.u2_count);
    } else if (full == "mesh.z") {
      cfg.mesh.z = detail::as_complex(v, full);
    } else if (full == "mesh.output") {
      cfg.mesh.output = as_string(v, full);
    } else {
      throw ConfigError(detail::where(line_no, full) + "unknown key");
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qdlab::cli
