#pragma once

// Small arithmetic expression language used for coefficient fields, data
// functions and semilinear terms in run configurations.

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fractrans::expr {

enum class TokenKind { Number, Identifier, Operator, Paren, Comma };

struct Token {
  TokenKind kind;
  std::string lexeme;
  std::size_t position;  // byte offset into the source

  bool operator==(const Token&) const = default;
};

class LexError : public std::runtime_error {
 public:
  LexError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position, std::vector<std::string> expected)
      : std::runtime_error(what), position_(position), expected_(std::move(expected)) {}
  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Builtin { Sin, Cos, Exp, Sqrt, Abs, Erfc, Pow, Min, Max };

std::string_view builtin_name(Builtin f);
std::size_t builtin_arity(Builtin f);

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression tree node. Variables are referenced by slot: slot 0 is
/// the first bound variable (x, or u for one-variable expressions), slot 1 the
/// second (t).
struct Node {
  enum class Kind { Constant, Variable, Negate, Binary, Call };

  Kind kind;
  double value = 0.0;        // Constant
  std::size_t slot = 0;      // Variable
  std::string name;          // Variable
  BinaryOp op = BinaryOp::Add;
  Builtin fn = Builtin::Sin;
  std::vector<NodePtr> args;  // Negate: 1, Binary: 2, Call: arity
};

NodePtr make_constant(double v);
NodePtr make_variable(std::string name, std::size_t slot);
NodePtr make_negate(NodePtr operand);
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
NodePtr make_call(Builtin fn, std::vector<NodePtr> args);

/// Variable names allowed in an expression; their index is the slot.
struct Variables {
  std::vector<std::string> names{"x", "t"};

  static Variables xt() { return {}; }
  static Variables single(std::string name) { return Variables{{std::move(name)}}; }
};

std::vector<Token> tokenize(std::string_view source);

NodePtr parse(const std::vector<Token>& tokens, const Variables& vars = Variables::xt());
NodePtr parse(std::string_view source, const Variables& vars = Variables::xt());

/// Evaluates with slot 0 bound to `a` and slot 1 bound to `b`. Throws EvalError
/// on division by zero, domain errors and non-finite results.
double eval(const Node& ast, double a, double b = 0.0);

/// Prints with the minimum parentheses needed for `parse` to rebuild the same
/// tree. Constants use the shortest round-tripping decimal form.
std::string print(const Node& ast);

bool structurally_equal(const Node& lhs, const Node& rhs);

/// Symbolic derivative with respect to a variable slot. abs, min and max
/// differentiate through the sign factor (a-b)/|a-b|, which fails to evaluate
/// where the arguments coincide. A variable exponent needs a positive
/// constant base; otherwise std::domain_error is thrown.
NodePtr differentiate(const NodePtr& ast, std::size_t slot);

/// True when no Variable node appears in the tree.
bool is_constant(const Node& ast);

/// Parsed expression with its source text.
class Expression {
 public:
  Expression() = default;
  explicit Expression(std::string source, const Variables& vars = Variables::xt());
  Expression(std::string source, NodePtr ast) : source_(std::move(source)), ast_(std::move(ast)) {}

  const std::string& source() const noexcept { return source_; }
  const NodePtr& ast() const noexcept { return ast_; }
  double operator()(double a, double b = 0.0) const { return eval(*ast_, a, b); }

 private:
  std::string source_;
  NodePtr ast_;
};

}  // namespace fractrans::expr
