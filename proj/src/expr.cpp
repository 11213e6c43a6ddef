#include "fractrans/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

namespace fractrans::expr {

namespace {

constexpr std::array<std::pair<std::string_view, Builtin>, 9> kBuiltins{{
    {"sin", Builtin::Sin},
    {"cos", Builtin::Cos},
    {"exp", Builtin::Exp},
    {"sqrt", Builtin::Sqrt},
    {"abs", Builtin::Abs},
    {"erfc", Builtin::Erfc},
    {"pow", Builtin::Pow},
    {"min", Builtin::Min},
    {"max", Builtin::Max},
}};

std::optional<Builtin> lookup_builtin(std::string_view name) {
  for (const auto& [n, f] : kBuiltins) {
    if (n == name) return f;
  }
  return std::nullopt;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, const Variables& vars) : tokens_(tokens), vars_(vars) {}

  NodePtr parse_all() {
    NodePtr e = expression(1);
    if (pos_ < tokens_.size()) {
      fail("unexpected trailing token '" + tokens_[pos_].lexeme + "'", {"operator", "end of input"});
    }
    return e;
  }

 private:
  const Token* peek() const { return pos_ < tokens_.size() ? &tokens_[pos_] : nullptr; }

  std::size_t here() const {
    if (pos_ < tokens_.size()) return tokens_[pos_].position;
    if (tokens_.empty()) return 0;
    const Token& last = tokens_.back();
    return last.position + last.lexeme.size();
  }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    throw ParseError(msg + " at offset " + std::to_string(here()), here(), std::move(expected));
  }

  bool accept(TokenKind kind, std::string_view lexeme) {
    const Token* t = peek();
    if (t && t->kind == kind && t->lexeme == lexeme) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(TokenKind kind, std::string_view lexeme) {
    if (!accept(kind, lexeme)) {
      const Token* t = peek();
      fail(std::string("expected '") + std::string(lexeme) + "' but found " +
               (t ? "'" + t->lexeme + "'" : std::string("end of input")),
           {std::string(lexeme)});
    }
  }

  static int infix_precedence(const Token& t) {
    if (t.kind != TokenKind::Operator) return 0;
    if (t.lexeme == "+" || t.lexeme == "-") return 1;
    if (t.lexeme == "*" || t.lexeme == "/") return 2;
    return 0;
  }

  NodePtr expression(int min_prec) {
    NodePtr lhs = unary();
    while (const Token* t = peek()) {
      const int prec = infix_precedence(*t);
      if (prec == 0 || prec < min_prec) break;
      const char op = t->lexeme[0];
      ++pos_;
      NodePtr rhs = expression(prec + 1);
      BinaryOp bop = op == '+' ? BinaryOp::Add : op == '-' ? BinaryOp::Sub : op == '*' ? BinaryOp::Mul : BinaryOp::Div;
      lhs = make_binary(bop, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  NodePtr unary() {
    if (accept(TokenKind::Operator, "-")) return make_negate(unary());
    if (accept(TokenKind::Operator, "+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept(TokenKind::Operator, "^")) {
      return make_binary(BinaryOp::Pow, std::move(base), unary());
    }
    return base;
  }

  NodePtr primary() {
    const Token* t = peek();
    if (!t) fail("unexpected end of input", {"number", "identifier", "("});
    switch (t->kind) {
      case TokenKind::Number: {
        double v = 0.0;
        const char* first = t->lexeme.data();
        const char* last = first + t->lexeme.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) fail("malformed number '" + t->lexeme + "'", {"number"});
        ++pos_;
        return make_constant(v);
      }
      case TokenKind::Identifier: {
        const std::string name = t->lexeme;
        if (auto fn = lookup_builtin(name)) {
          ++pos_;
          return call(*fn, name);
        }
        for (std::size_t slot = 0; slot < vars_.names.size(); ++slot) {
          if (vars_.names[slot] == name) {
            ++pos_;
            return make_variable(name, slot);
          }
        }
        std::vector<std::string> expected = vars_.names;
        for (const auto& [n, f] : kBuiltins) expected.emplace_back(n);
        fail("unknown identifier '" + name + "'", std::move(expected));
      }
      case TokenKind::Paren:
        if (t->lexeme == "(") {
          ++pos_;
          NodePtr inner = expression(1);
          expect(TokenKind::Paren, ")");
          return inner;
        }
        break;
      default:
        break;
    }
    fail("unexpected token '" + t->lexeme + "'", {"number", "identifier", "("});
  }

  NodePtr call(Builtin fn, const std::string& name) {
    expect(TokenKind::Paren, "(");
    std::vector<NodePtr> args;
    if (!accept(TokenKind::Paren, ")")) {
      args.push_back(expression(1));
      while (accept(TokenKind::Comma, ",")) args.push_back(expression(1));
      expect(TokenKind::Paren, ")");
    }
    if (args.size() != builtin_arity(fn)) {
      fail("function '" + name + "' takes " + std::to_string(builtin_arity(fn)) + " argument(s), got " +
               std::to_string(args.size()),
           {});
    }
    return make_call(fn, std::move(args));
  }

  const std::vector<Token>& tokens_;
  const Variables& vars_;
  std::size_t pos_ = 0;
};

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

double eval_node(const Node& n, double a, double b) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::Variable:
      return n.slot == 0 ? a : b;
    case Node::Kind::Negate:
      return -eval_node(*n.args[0], a, b);
    case Node::Kind::Binary: {
      const double l = eval_node(*n.args[0], a, b);
      const double r = eval_node(*n.args[1], a, b);
      switch (n.op) {
        case BinaryOp::Add: return checked(l + r, "'+'");
        case BinaryOp::Sub: return checked(l - r, "'-'");
        case BinaryOp::Mul: return checked(l * r, "'*'");
        case BinaryOp::Div:
          if (r == 0.0) throw EvalError("division by zero");
          return checked(l / r, "'/'");
        case BinaryOp::Pow:
          return checked(std::pow(l, r), "'^'");
      }
      break;
    }
    case Node::Kind::Call: {
      const double v = eval_node(*n.args[0], a, b);
      switch (n.fn) {
        case Builtin::Sin: return checked(std::sin(v), "sin");
        case Builtin::Cos: return checked(std::cos(v), "cos");
        case Builtin::Exp: return checked(std::exp(v), "exp");
        case Builtin::Sqrt:
          if (v < 0.0) throw EvalError("sqrt of negative argument");
          return std::sqrt(v);
        case Builtin::Abs: return std::abs(v);
        case Builtin::Erfc: return std::erfc(v);
        case Builtin::Pow: return checked(std::pow(v, eval_node(*n.args[1], a, b)), "pow");
        case Builtin::Min: return std::min(v, eval_node(*n.args[1], a, b));
        case Builtin::Max: return std::max(v, eval_node(*n.args[1], a, b));
      }
      break;
    }
  }
  throw EvalError("malformed expression tree");
}

int precedence(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value < 0.0 || std::signbit(n.value) ? 3 : 5;
    case Node::Kind::Variable:
    case Node::Kind::Call:
      return 5;
    case Node::Kind::Negate:
      return 3;
    case Node::Kind::Binary:
      switch (n.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
  }
  return 5;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void print_into(const Node& n, std::string& out);

void print_child(const Node& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_into(child, out);
  if (parens) out += ')';
}

void print_into(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Constant:
      out += format_number(n.value);
      return;
    case Node::Kind::Variable:
      out += n.name;
      return;
    case Node::Kind::Negate:
      out += '-';
      print_child(*n.args[0], precedence(*n.args[0]) < 3, out);
      return;
    case Node::Kind::Binary: {
      const int p = precedence(n);
      const Node& l = *n.args[0];
      const Node& r = *n.args[1];
      if (n.op == BinaryOp::Pow) {
        print_child(l, precedence(l) <= 4, out);
        out += '^';
        print_child(r, precedence(r) < 3, out);
        return;
      }
      print_child(l, precedence(l) < p, out);
      switch (n.op) {
        case BinaryOp::Add: out += '+'; break;
        case BinaryOp::Sub: out += '-'; break;
        case BinaryOp::Mul: out += '*'; break;
        default: out += '/'; break;
      }
      print_child(r, precedence(r) <= p, out);
      return;
    }
    case Node::Kind::Call:
      out += builtin_name(n.fn);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_into(*n.args[i], out);
      }
      out += ')';
      return;
  }
}

bool is_const_value(const NodePtr& n, double v) {
  return n->kind == Node::Kind::Constant && n->value == v;
}

// Constructors that fold the trivial identities produced by differentiation.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_const_value(a, 0.0)) return b;
  if (is_const_value(b, 0.0)) return a;
  return make_binary(BinaryOp::Add, std::move(a), std::move(b));
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const_value(b, 0.0)) return a;
  if (is_const_value(a, 0.0)) return make_negate(std::move(b));
  return make_binary(BinaryOp::Sub, std::move(a), std::move(b));
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const_value(a, 0.0) || is_const_value(b, 0.0)) return make_constant(0.0);
  if (is_const_value(a, 1.0)) return b;
  if (is_const_value(b, 1.0)) return a;
  return make_binary(BinaryOp::Mul, std::move(a), std::move(b));
}
NodePtr div(NodePtr a, NodePtr b) {
  if (is_const_value(a, 0.0)) return make_constant(0.0);
  return make_binary(BinaryOp::Div, std::move(a), std::move(b));
}
NodePtr neg(NodePtr a) {
  if (is_const_value(a, 0.0)) return a;
  return make_negate(std::move(a));
}

// (a - b) / |a - b|, the sign factor used by abs, min and max.
NodePtr sign_of(const NodePtr& a) { return div(a, make_call(Builtin::Abs, {a})); }

}  // namespace

std::string_view builtin_name(Builtin f) {
  for (const auto& [n, g] : kBuiltins) {
    if (g == f) return n;
  }
  return "?";
}

std::size_t builtin_arity(Builtin f) {
  switch (f) {
    case Builtin::Pow:
    case Builtin::Min:
    case Builtin::Max: return 2;
    default: return 1;
  }
}

NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Constant;
  n->value = v;
  return n;
}

NodePtr make_variable(std::string name, std::size_t slot) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->name = std::move(name);
  n->slot = slot;
  return n;
}

NodePtr make_negate(NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Negate;
  n->args.push_back(std::move(operand));
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return n;
}

NodePtr make_call(Builtin fn, std::vector<NodePtr> args) {
  if (args.size() != builtin_arity(fn)) {
    throw std::invalid_argument("arity mismatch for " + std::string(builtin_name(fn)));
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Call;
  n->fn = fn;
  n->args = std::move(args);
  return n;
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      while (i < src.size() && is_digit(src[i])) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && is_digit(src[i])) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && is_digit(src[j])) {
          while (j < src.size() && is_digit(src[j])) ++j;
          i = j;
        } else {
          throw LexError("malformed exponent in number at offset " + std::to_string(start), start);
        }
      }
      out.push_back({TokenKind::Number, std::string(src.substr(start, i - start)), start});
    } else if (is_ident_start(c)) {
      while (i < src.size() && is_ident_char(src[i])) ++i;
      out.push_back({TokenKind::Identifier, std::string(src.substr(start, i - start)), start});
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      out.push_back({TokenKind::Operator, std::string(1, c), start});
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back({TokenKind::Paren, std::string(1, c), start});
      ++i;
    } else if (c == ',') {
      out.push_back({TokenKind::Comma, ",", start});
      ++i;
    } else {
      throw LexError("unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(start), start);
    }
  }
  return out;
}

NodePtr parse(const std::vector<Token>& tokens, const Variables& vars) {
  if (tokens.empty()) throw ParseError("empty expression", 0, {"number", "identifier", "("});
  return Parser(tokens, vars).parse_all();
}

NodePtr parse(std::string_view source, const Variables& vars) { return parse(tokenize(source), vars); }

double eval(const Node& ast, double a, double b) { return eval_node(ast, a, b); }

std::string print(const Node& ast) {
  std::string out;
  print_into(ast, out);
  return out;
}

bool structurally_equal(const Node& l, const Node& r) {
  if (l.kind != r.kind || l.args.size() != r.args.size()) return false;
  switch (l.kind) {
    case Node::Kind::Constant:
      if (l.value != r.value) return false;
      break;
    case Node::Kind::Variable:
      if (l.slot != r.slot || l.name != r.name) return false;
      break;
    case Node::Kind::Binary:
      if (l.op != r.op) return false;
      break;
    case Node::Kind::Call:
      if (l.fn != r.fn) return false;
      break;
    case Node::Kind::Negate:
      break;
  }
  for (std::size_t i = 0; i < l.args.size(); ++i) {
    if (!structurally_equal(*l.args[i], *r.args[i])) return false;
  }
  return true;
}

bool is_constant(const Node& ast) {
  if (ast.kind == Node::Kind::Variable) return false;
  for (const auto& a : ast.args) {
    if (!is_constant(*a)) return false;
  }
  return true;
}

NodePtr differentiate(const NodePtr& ast, std::size_t slot);

namespace {

// d/dv c^g = c^g ln(c) g' for a positive constant base c.
NodePtr power_of_constant(const NodePtr& ast, const NodePtr& base, const NodePtr& exponent, std::size_t slot) {
  if (!is_constant(*base)) throw std::domain_error("derivative of a variable exponent is not supported");
  const double c = eval(*base, 0.0, 0.0);
  if (!(c > 0.0)) throw std::domain_error("derivative of a power with non-positive constant base");
  return mul(mul(ast, make_constant(std::log(c))), differentiate(exponent, slot));
}

}  // namespace

NodePtr differentiate(const NodePtr& ast, std::size_t slot) {
  const Node& n = *ast;
  switch (n.kind) {
    case Node::Kind::Constant:
      return make_constant(0.0);
    case Node::Kind::Variable:
      return make_constant(n.slot == slot ? 1.0 : 0.0);
    case Node::Kind::Negate:
      return neg(differentiate(n.args[0], slot));
    case Node::Kind::Binary: {
      const NodePtr& a = n.args[0];
      const NodePtr& b = n.args[1];
      NodePtr da = differentiate(a, slot);
      switch (n.op) {
        case BinaryOp::Add: return add(da, differentiate(b, slot));
        case BinaryOp::Sub: return sub(da, differentiate(b, slot));
        case BinaryOp::Mul: return add(mul(da, b), mul(a, differentiate(b, slot)));
        case BinaryOp::Div:
          return div(sub(mul(da, b), mul(a, differentiate(b, slot))), mul(b, b));
        case BinaryOp::Pow:
          if (!is_constant(*b)) return power_of_constant(ast, a, b, slot);
          return mul(mul(b, make_binary(BinaryOp::Pow, a, sub(b, make_constant(1.0)))), da);
      }
      break;
    }
    case Node::Kind::Call: {
      const NodePtr& a = n.args[0];
      NodePtr da = differentiate(a, slot);
      switch (n.fn) {
        case Builtin::Sin: return mul(make_call(Builtin::Cos, {a}), da);
        case Builtin::Cos: return neg(mul(make_call(Builtin::Sin, {a}), da));
        case Builtin::Exp: return mul(ast, da);
        case Builtin::Sqrt: return div(da, mul(make_constant(2.0), ast));
        case Builtin::Abs: return mul(sign_of(a), da);
        case Builtin::Erfc: {
          NodePtr gauss = make_call(Builtin::Exp, {make_negate(make_binary(BinaryOp::Pow, a, make_constant(2.0)))});
          return neg(mul(mul(make_constant(2.0 / std::sqrt(std::numbers::pi)), gauss), da));
        }
        case Builtin::Pow: {
          const NodePtr& b = n.args[1];
          if (!is_constant(*b)) return power_of_constant(ast, a, b, slot);
          return mul(mul(b, make_call(Builtin::Pow, {a, sub(b, make_constant(1.0))})), da);
        }
        case Builtin::Min:
        case Builtin::Max: {
          // min(a,b) = (a+b)/2 - |a-b|/2, max(a,b) = (a+b)/2 + |a-b|/2
          const NodePtr& b = n.args[1];
          NodePtr db = differentiate(b, slot);
          NodePtr half = make_constant(0.5);
          NodePtr mean = mul(half, add(da, db));
          NodePtr spread = mul(half, mul(sign_of(sub(a, b)), sub(da, db)));
          return n.fn == Builtin::Min ? sub(mean, spread) : add(mean, spread);
        }
      }
      break;
    }
  }
  throw std::logic_error("malformed expression tree");
}

Expression::Expression(std::string source, const Variables& vars)
    : source_(std::move(source)), ast_(parse(source_, vars)) {}

}  // namespace fractrans::expr
