#pragma once

// Strict parser for the key-value text format shared by the crystal database
// and run configurations:
//
//   # comment
//   [section]
//   key = value
//
// Sections may repeat. Keys may not repeat inside one section. Every key must
// be consumed by a reader; leftovers are reported with their line number.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pdcsim/errors.hpp"

namespace pdc::kv {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

struct Document {
  std::string source;  // file name used in diagnostics
  std::vector<Section> sections;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline Document parse(std::string_view text, std::string source) {
  Document doc{std::move(source), {}};
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const auto where = doc.source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      auto name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(where + "empty section name");
      doc.sections.push_back({std::string(name), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    auto key = detail::trim(line.substr(0, eq));
    auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (doc.sections.empty()) throw ConfigError(where + "key '" + std::string(key) + "' outside any section");
    auto& sec = doc.sections.back();
    for (const auto& e : sec.entries) {
      if (e.key == key) {
        throw ConfigError(where + "duplicate key '" + std::string(key) + "' (first on line " +
                          std::to_string(e.line) + ")");
      }
    }
    sec.entries.push_back({std::string(key), std::string(value), line_no});
  }
  return doc;
}

inline Document parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

/// Typed, consumption-tracking view of one section.
class Reader {
 public:
  Reader(const Document& doc, const Section& section) : doc_(&doc), section_(&section) {}

  const Section& section() const { return *section_; }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  std::optional<std::string> string_opt(std::string_view key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    return e->value;
  }

  std::string string(std::string_view key) {
    auto v = string_opt(key);
    if (!v) throw missing(key);
    return *v;
  }

  std::optional<double> number_opt(std::string_view key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    return to_double(*e, e->value);
  }

  double number(std::string_view key) {
    auto v = number_opt(key);
    if (!v) throw missing(key);
    return *v;
  }

  std::optional<long long> integer_opt(std::string_view key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    long long out = 0;
    const auto* first = e->value.data();
    const auto* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) throw bad(*e, "an integer");
    return out;
  }

  std::optional<bool> boolean_opt(std::string_view key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    throw bad(*e, "a boolean (true/false)");
  }

  std::optional<std::vector<double>> list_opt(std::string_view key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    std::string_view rest = e->value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      auto item = detail::trim(rest.substr(0, comma));
      if (item.empty()) throw bad(*e, "a comma-separated list of numbers");
      out.push_back(to_double(*e, item));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (out.empty()) throw bad(*e, "a non-empty list of numbers");
    return out;
  }

  std::vector<double> list(std::string_view key) {
    auto v = list_opt(key);
    if (!v) throw missing(key);
    return *v;
  }

  /// Line of a key, or of the section header when the key is absent.
  int line_of(std::string_view key) const {
    const Entry* e = find(key);
    return e ? e->line : section_->line;
  }

  ConfigError error(std::string_view key, const std::string& message) const {
    return ConfigError(doc_->source + ":" + std::to_string(line_of(key)) + ": [" + section_->name + "] " +
                       std::string(key) + ": " + message);
  }

  /// Throws on the first key nobody asked for.
  void finish() const {
    for (const auto& e : section_->entries) {
      if (!used_.contains(e.key)) {
        throw ConfigError(doc_->source + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                          "' in [" + section_->name + "]");
      }
    }
  }

 private:
  const Entry* find(std::string_view key) const {
    for (const auto& e : section_->entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  const Entry* take(std::string_view key) {
    const Entry* e = find(key);
    if (e) used_.insert(e->key);
    return e;
  }

  double to_double(const Entry& e, std::string_view text) const {
    std::string s(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) throw bad(e, "a number");
    return v;
  }

  ConfigError missing(std::string_view key) const {
    return ConfigError(doc_->source + ":" + std::to_string(section_->line) + ": [" + section_->name +
                       "] missing required key '" + std::string(key) + "'");
  }

  ConfigError bad(const Entry& e, const std::string& expected) const {
    return ConfigError(doc_->source + ":" + std::to_string(e.line) + ": key '" + e.key + "' must be " +
                       expected + ", got '" + e.value + "'");
  }

  const Document* doc_;
  const Section* section_;
  std::set<std::string> used_;
};

}  // namespace pdc::kv
