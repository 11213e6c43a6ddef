#pragma once

// Reader for the subset of TOML used by run configurations: tables, bare
// keys, strings, integers, floats, booleans and (nested) arrays.

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fractrans::toml {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Value;
using Array = std::vector<Value>;

struct Value {
  // integers above the int64 range are kept as uint64
  std::variant<bool, std::int64_t, double, std::string, Array, std::uint64_t> data;
  std::size_t line = 0;

  std::string type_name() const;
};

/// Keys of one table in file order.
struct Table {
  std::vector<std::string> order;
  std::map<std::string, Value> entries;
};

/// Root table under the empty name.
struct Document {
  std::map<std::string, Table> tables;
  std::vector<std::string> order;
};

Document parse(const std::string& text);

}  // namespace fractrans::toml
