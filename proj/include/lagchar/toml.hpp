#pragma once

// Reader for the subset of TOML used by scenario files: [tables],
// [[arrays.of.tables]], dotted keys, basic and literal strings, integers,
// floats, booleans, (multi-line) arrays and inline tables. The result is a
// nlohmann::json object; errors carry the offending line, and the line of
// every key is kept (as a JSON pointer) for later validation messages.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagchar/errors.hpp"

namespace lagchar::toml {

using json = nlohmann::json;
using LineMap = std::map<std::string, int>;

struct Document {
  json root;
  LineMap lines;

  // Line of the key at `pointer`, or of its closest recorded parent.
  int line_of(std::string pointer) const {
    while (true) {
      auto it = lines.find(pointer);
      if (it != lines.end()) return it->second;
      const auto cut = pointer.rfind('/');
      if (cut == std::string::npos || pointer.empty()) return 0;
      pointer.resize(cut);
    }
  }
};

class Parser {
 public:
  explicit Parser(std::string text) : s_(std::move(text)) {}

  Document parse() {
    Document doc{json::object(), {}};
    json* table = &doc.root;
    std::string prefix;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(doc.root, prefix);
      } else {
        key_value(*table, prefix);
      }
      end_of_line();
    }
    doc.lines = std::move(lines_);
    return doc;
  }

 private:
  std::string s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  LineMap lines_;

  static std::string join(const std::string& prefix,
                          const std::vector<std::string>& path) {
    std::string out = prefix;
    for (const auto& k : path) out += "/" + k;
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(what, line_);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }
  void skip_blank_lines() {
    while (true) {
      skip_ws();
      skip_comment();
      if (!eof() && peek() == '\n') {
        get();
        continue;
      }
      return;
    }
  }
  // Whitespace, comments and newlines inside arrays and inline tables.
  void skip_all() {
    while (true) {
      skip_ws();
      skip_comment();
      if (!eof() && peek() == '\n') {
        get();
      } else {
        return;
      }
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "' after value");
    get();
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> keys;
    while (true) {
      skip_ws();
      keys.push_back(simple_key());
      skip_ws();
      if (peek() != '.') return keys;
      ++pos_;
    }
  }

  std::string simple_key() {
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                      peek() == '_' || peek() == '-')) {
      k += get();
    }
    if (k.empty()) fail("expected a key");
    return k;
  }

  json* descend(json& root, const std::vector<std::string>& path, std::size_t n) {
    json* cur = &root;
    for (std::size_t i = 0; i < n; ++i) {
      json& next = (*cur)[path[i]];
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        cur = &next.back();
      } else if (next.is_object()) {
        cur = &next;
      } else {
        fail("key '" + path[i] + "' is not a table");
      }
    }
    return cur;
  }

  json* header(json& root, std::string& prefix) {
    ++pos_;
    const bool array = peek() == '[';
    if (array) ++pos_;
    const auto path = key_path();
    if (peek() != ']') fail("expected ']' to close table header");
    ++pos_;
    if (array) {
      if (peek() != ']') fail("expected ']]' to close array-of-tables header");
      ++pos_;
    }
    json* parent = descend(root, path, path.size() - 1);
    json& slot = (*parent)[path.back()];
    prefix = join("", path);
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) fail("'" + path.back() + "' already defined as a non-array");
      slot.push_back(json::object());
      prefix += "/" + std::to_string(slot.size() - 1);
      lines_[prefix] = line_;
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (!slot.is_object()) fail("'" + path.back() + "' already defined as a value");
    lines_[prefix] = line_;
    return &slot;
  }

  void key_value(json& table, const std::string& prefix) {
    const auto path = key_path();
    const std::string here = join(prefix, path);
    lines_[here] = line_;
    skip_ws();
    if (peek() != '=') fail("expected '=' after key '" + path.back() + "'");
    ++pos_;
    skip_ws();
    json* target = descend(table, path, path.size() - 1);
    if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*target)[path.back()] = value(here);
  }

  json value(const std::string& here) {
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array(here);
    if (c == '{') return inline_table(here);
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

  std::string basic_string() {
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated string");
      switch (get()) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail("unsupported escape in string");
      }
    }
  }

  std::string literal_string() {
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '\'') return out;
      out += c;
    }
  }

  json array(const std::string& here) {
    ++pos_;
    json arr = json::array();
    while (true) {
      skip_all();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      const std::string item = here + "/" + std::to_string(arr.size());
      lines_[item] = line_;
      arr.push_back(value(item));
      skip_all();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json inline_table(const std::string& here) {
    ++pos_;
    json t = json::object();
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return t;
    }
    while (true) {
      skip_ws();
      key_value(t, here);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() == '}') {
        ++pos_;
        return t;
      } else {
        fail("expected ',' or '}' in inline table");
      }
    }
  }

  json number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                      peek() == '+' || peek() == '-' || peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string tok = s_.substr(start, pos_ - start);
    std::erase(tok, '_');
    if (tok.empty()) fail(std::string("unexpected '") + peek() + "'");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos ||
                          tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan";
    char* end = nullptr;
    if (is_float) {
      const double v = std::strtod(tok.c_str(), &end);
      if (*end != '\0') fail("invalid number '" + tok + "'");
      return v;
    }
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (*end != '\0') fail("invalid value '" + tok + "'");
    return v;
  }
};

inline Document parse(const std::string& text) { return Parser(text).parse(); }

inline Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace lagchar::toml
