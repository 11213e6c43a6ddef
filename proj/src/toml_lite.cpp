#include "fractrans/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace fractrans::toml {

std::string Value::type_name() const {
  switch (data.index()) {
    case 0:
      return "boolean";
    case 1:
      return "integer";
    case 2:
      return "float";
    case 3:
      return "string";
    case 4:
      return "array";
    default:
      return "integer";
  }
}

namespace {

bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

class Reader {
 public:
  explicit Reader(const std::string& text) : s_(text) {}

  Document run() {
    Document doc;
    doc.order.push_back("");
    doc.tables[""];
    std::string current;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_space();
        std::string name = bare_key();
        skip_space();
        expect(']');
        end_of_line();
        if (doc.tables.count(name)) fail("duplicate table [" + name + "]");
        doc.tables[name];
        doc.order.push_back(name);
        current = name;
        continue;
      }
      const std::size_t key_line = line_;
      std::string key = bare_key();
      skip_space();
      expect('=');
      skip_space();
      Value v = value();
      v.line = key_line;
      end_of_line();
      auto& table = doc.tables[current];
      if (table.entries.count(key)) {
        fail("duplicate key '" + key + "'" + (current.empty() ? std::string() : " in [" + current + "]"));
      }
      table.order.push_back(key);
      table.entries.emplace(key, std::move(v));
    }
    return doc;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError("line " + std::to_string(line_) + ": " + what, line_);
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    for (;;) {
      skip_space();
      skip_comment();
      if (!eof() && peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }

  // whitespace, comments and newlines inside arrays
  void skip_all() { skip_blank_lines(); }

  void end_of_line() {
    skip_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    ++pos_;
    ++line_;
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (!eof() && bare_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  Value value() {
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') return {basic_string(), line_};
    if (c == '\'') return {literal_string(), line_};
    if (c == '[') return {array(), line_};
    if (s_.compare(pos_, 4, "true") == 0 && !bare_follows(4)) {
      pos_ += 4;
      return {true, line_};
    }
    if (s_.compare(pos_, 5, "false") == 0 && !bare_follows(5)) {
      pos_ += 5;
      return {false, line_};
    }
    return number();
  }

  bool bare_follows(std::size_t n) const { return pos_ + n < s_.size() && bare_char(s_[pos_ + n]); }

  std::string basic_string() {
    ++pos_;
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (eof()) fail("unterminated string");
      const char e = s_[pos_++];
      switch (e) {
        case '"':
          out.push_back('"');
          break;
        case '\\':
          out.push_back('\\');
          break;
        case 'n':
          out.push_back('\n');
          break;
        case 't':
          out.push_back('\t');
          break;
        default:
          fail(std::string("unsupported escape '\\") + e + "'");
      }
    }
  }

  std::string literal_string() {
    ++pos_;
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (eof() || peek() != '\'') fail("unterminated string");
    std::string out = s_.substr(start, pos_ - start);
    ++pos_;
    return out;
  }

  Array array() {
    ++pos_;
    Array out;
    for (;;) {
      skip_all();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      const std::size_t l = line_;
      Value v = value();
      v.line = l;
      out.push_back(std::move(v));
      skip_all();
      if (eof()) fail("unterminated array");
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']' in array");
    }
  }

  Value number() {
    const std::size_t start = pos_;
    while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) ++pos_;
    std::string text;
    for (char c : s_.substr(start, pos_ - start))
      if (c != '_') text.push_back(c);
    if (text.empty()) fail("expected a value");
    std::string body = text;
    bool negative = false;
    if (body[0] == '+' || body[0] == '-') {
      negative = body[0] == '-';
      body = body.substr(1);
    }
    if (body == "inf") return {negative ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity(), line_};
    if (body == "nan") return {std::numeric_limits<double>::quiet_NaN(), line_};
    const bool is_float = body.find_first_of(".eE") != std::string::npos;
    const char* first = text.data() + (text[0] == '+' ? 1 : 0);
    const char* last = text.data() + text.size();
    if (is_float) {
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || ptr != last) fail("malformed number '" + text + "'");
      return {d, line_};
    }
    std::int64_t i = 0;
    auto [ptr, ec] = std::from_chars(first, last, i);
    if (ec == std::errc::result_out_of_range && !negative) {
      std::uint64_t u = 0;
      auto [uptr, uec] = std::from_chars(first, last, u);
      if (uec == std::errc() && uptr == last) return {u, line_};
    }
    if (ec != std::errc() || ptr != last) fail("malformed value '" + text + "'");
    return {i, line_};
  }
};

}  // namespace

Document parse(const std::string& text) { return Reader(text).run(); }

}  // namespace fractrans::toml
