#include "ceal/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "ceal/error.hpp"

namespace ceal {

enum class Op {
  Number, Var, Neg, Not,
  Add, Sub, Mul, Div, Mod,
  Lt, Le, Gt, Ge, Eq, Ne, And, Or,
  Min, Max, Ceil, Floor, Abs, Log2
};

struct Expression::Node {
  Op op;
  double number = 0.0;
  std::size_t slot = 0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

enum class Tok { Number, Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
};

bool is_function(std::string_view s) {
  return s == "min" || s == "max" || s == "ceil" || s == "floor" || s == "abs" || s == "log2";
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(src.data() + i, src.data() + src.size(), v);
      if (ec != std::errc{}) throw ConfigError("expression: bad number at offset " + std::to_string(i));
      const auto len = static_cast<std::size_t>(ptr - (src.data() + i));
      out.push_back({Tok::Number, std::string(src.substr(i, len)), v});
      i += len;
    } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i))});
      i = j;
    } else {
      static constexpr std::string_view two[] = {"<=", ">=", "==", "!=", "&&", "||"};
      bool matched = false;
      for (auto t : two) {
        if (src.substr(i, 2) == t) {
          out.push_back({Tok::Punct, std::string(t)});
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("+-*/%<>!(),").find(ch) == std::string_view::npos) {
        throw ConfigError(std::string("expression: unexpected character '") + ch + "'");
      }
      out.push_back({Tok::Punct, std::string(1, ch)});
      ++i;
    }
  }
  out.push_back({Tok::End, ""});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, std::span<const std::string> names)
      : toks_(std::move(toks)), names_(names) {}

  NodePtr parse() {
    auto n = parse_or();
    if (peek().kind != Tok::End) throw ConfigError("expression: trailing input near '" + peek().text + "'");
    return n;
  }

  std::vector<std::size_t> operands;

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool accept(std::string_view p) {
    if (peek().kind == Tok::Punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(std::string_view p) {
    if (!accept(p)) throw ConfigError("expression: expected '" + std::string(p) + "'");
  }

  static NodePtr make(Op op, std::vector<NodePtr> args) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
  }

  NodePtr parse_or() {
    auto lhs = parse_and();
    while (accept("||")) lhs = make(Op::Or, {lhs, parse_and()});
    return lhs;
  }
  NodePtr parse_and() {
    auto lhs = parse_cmp();
    while (accept("&&")) lhs = make(Op::And, {lhs, parse_cmp()});
    return lhs;
  }
  NodePtr parse_cmp() {
    auto lhs = parse_add();
    static constexpr std::pair<std::string_view, Op> ops[] = {
        {"<=", Op::Le}, {">=", Op::Ge}, {"==", Op::Eq}, {"!=", Op::Ne}, {"<", Op::Lt}, {">", Op::Gt}};
    for (auto [text, op] : ops) {
      if (accept(text)) return make(op, {lhs, parse_add()});
    }
    return lhs;
  }
  NodePtr parse_add() {
    auto lhs = parse_mul();
    for (;;) {
      if (accept("+")) lhs = make(Op::Add, {lhs, parse_mul()});
      else if (accept("-")) lhs = make(Op::Sub, {lhs, parse_mul()});
      else return lhs;
    }
  }
  NodePtr parse_mul() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept("*")) lhs = make(Op::Mul, {lhs, parse_unary()});
      else if (accept("/")) lhs = make(Op::Div, {lhs, parse_unary()});
      else if (accept("%")) lhs = make(Op::Mod, {lhs, parse_unary()});
      else return lhs;
    }
  }
  NodePtr parse_unary() {
    if (accept("-")) return make(Op::Neg, {parse_unary()});
    if (accept("!")) return make(Op::Not, {parse_unary()});
    return parse_primary();
  }
  NodePtr parse_primary() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      ++pos_;
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Number;
      n->number = t.number;
      return n;
    }
    if (t.kind == Tok::Ident) {
      ++pos_;
      if (is_function(t.text)) return parse_call(t.text);
      auto it = std::find(names_.begin(), names_.end(), t.text);
      if (it == names_.end()) throw ConfigError("expression: unknown parameter '" + t.text + "'");
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Var;
      n->slot = static_cast<std::size_t>(it - names_.begin());
      operands.push_back(n->slot);
      return n;
    }
    if (accept("(")) {
      auto n = parse_or();
      expect(")");
      return n;
    }
    throw ConfigError("expression: unexpected token '" + t.text + "'");
  }
  NodePtr parse_call(const std::string& fn) {
    expect("(");
    std::vector<NodePtr> args{parse_or()};
    while (accept(",")) args.push_back(parse_or());
    expect(")");
    const bool binary = fn == "min" || fn == "max";
    if (args.size() != (binary ? 2u : 1u)) throw ConfigError("expression: wrong arity for " + fn);
    Op op = fn == "min" ? Op::Min : fn == "max" ? Op::Max : fn == "ceil" ? Op::Ceil
          : fn == "floor" ? Op::Floor : fn == "abs" ? Op::Abs : Op::Log2;
    return make(op, std::move(args));
  }

  std::vector<Token> toks_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, std::span<const double> v) {
  auto a = [&](std::size_t i) { return eval(*n.args[i], v); };
  switch (n.op) {
    case Op::Number: return n.number;
    case Op::Var: return v[n.slot];
    case Op::Neg: return -a(0);
    case Op::Not: return a(0) == 0.0 ? 1.0 : 0.0;
    case Op::Add: return a(0) + a(1);
    case Op::Sub: return a(0) - a(1);
    case Op::Mul: return a(0) * a(1);
    case Op::Div: return a(0) / a(1);
    case Op::Mod: return std::fmod(a(0), a(1));
    case Op::Lt: return a(0) < a(1) ? 1.0 : 0.0;
    case Op::Le: return a(0) <= a(1) ? 1.0 : 0.0;
    case Op::Gt: return a(0) > a(1) ? 1.0 : 0.0;
    case Op::Ge: return a(0) >= a(1) ? 1.0 : 0.0;
    case Op::Eq: return a(0) == a(1) ? 1.0 : 0.0;
    case Op::Ne: return a(0) != a(1) ? 1.0 : 0.0;
    case Op::And: return (a(0) != 0.0 && a(1) != 0.0) ? 1.0 : 0.0;
    case Op::Or: return (a(0) != 0.0 || a(1) != 0.0) ? 1.0 : 0.0;
    case Op::Min: return std::min(a(0), a(1));
    case Op::Max: return std::max(a(0), a(1));
    case Op::Ceil: return std::ceil(a(0));
    case Op::Floor: return std::floor(a(0));
    case Op::Abs: return std::fabs(a(0));
    case Op::Log2: return std::log2(a(0));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view text, std::span<const std::string> names) {
  Parser p(tokenize(text), names);
  Expression e;
  e.root_ = p.parse();
  e.text_ = std::string(text);
  e.operands_ = std::move(p.operands);
  std::sort(e.operands_.begin(), e.operands_.end());
  e.operands_.erase(std::unique(e.operands_.begin(), e.operands_.end()), e.operands_.end());
  return e;
}

double Expression::evaluate(std::span<const double> values) const { return eval(*root_, values); }

std::vector<std::string> expression_identifiers(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) {
    if (t.kind == Tok::Ident && !is_function(t.text) &&
        std::find(out.begin(), out.end(), t.text) == out.end()) {
      out.push_back(t.text);
    }
  }
  return out;
}

}  // namespace ceal
