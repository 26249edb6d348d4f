#include "kirchhoff/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace kirchhoff::expr {

enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Sin, Cos, Tan, Exp, Log, Abs, Sqrt, Tanh, Min, Max, PowFn };

struct Node {
  Kind kind = Kind::Number;
  double value = 0.0;
  Variable var = Variable::t;
  Func fn = Func::Sin;
  std::unique_ptr<const Node> a;
  std::unique_ptr<const Node> b;
};

namespace {

using NodePtr = std::unique_ptr<const Node>;

struct FuncInfo {
  std::string_view name;
  Func fn;
  int arity;
};

constexpr std::array<FuncInfo, 11> kFunctions{{
    {"sin", Func::Sin, 1},   {"cos", Func::Cos, 1},   {"tan", Func::Tan, 1},
    {"exp", Func::Exp, 1},   {"log", Func::Log, 1},   {"abs", Func::Abs, 1},
    {"sqrt", Func::Sqrt, 1}, {"tanh", Func::Tanh, 1}, {"min", Func::Min, 2},
    {"max", Func::Max, 2},   {"pow", Func::PowFn, 2},
}};

std::optional<Variable> variable_named(std::string_view name) {
  if (name == "t") return Variable::t;
  if (name == "r") return Variable::r;
  if (name == "x") return Variable::x;
  if (name == "y") return Variable::y;
  return std::nullopt;
}

std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::t: return "t";
    case Variable::r: return "r";
    case Variable::x: return "x";
    case Variable::y: return "y";
  }
  return "?";
}

std::string_view function_name(Func f) {
  for (const auto& info : kFunctions)
    if (info.fn == f) return info.name;
  return "?";
}

NodePtr make_number(double v) {
  auto n = std::make_unique<Node>();
  n->kind = Kind::Number;
  n->value = v;
  return n;
}

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_unique<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, VariableSet allowed) : src_(src), allowed_(allowed) {}

  NodePtr parse_all() {
    auto root = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return root;
  }

  VariableSet used() const { return used_; }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Kind::Add, std::move(lhs), parse_term());
      } else if (accept('-')) {
        lhs = make_binary(Kind::Sub, std::move(lhs), parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Kind::Mul, std::move(lhs), parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(Kind::Div, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto n = std::make_unique<Node>();
      n->kind = Kind::Neg;
      n->a = parse_unary();
      return n;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept('^')) return make_binary(Kind::Pow, std::move(base), parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ParseError("syntax error: malformed number", start);
    return make_number(value);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);

    skip_ws();
    const bool is_call = pos_ < src_.size() && src_[pos_] == '(';
    if (!is_call) {
      if (name == "pi") return make_number(std::numbers::pi);
      auto var = variable_named(name);
      if (!var || !allowed_.contains(*var))
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
      used_.insert(*var);
      auto n = std::make_unique<Node>();
      n->kind = Kind::Var;
      n->var = *var;
      return n;
    }

    const FuncInfo* info = nullptr;
    for (const auto& f : kFunctions)
      if (f.name == name) info = &f;
    if (info == nullptr) throw ParseError("unknown function '" + std::string(name) + "'", start);

    ++pos_;  // '('
    std::vector<NodePtr> args;
    if (!accept(')')) {
      do {
        args.push_back(parse_expr());
      } while (accept(','));
      if (!accept(')')) fail("expected ')'");
    }
    if (static_cast<int>(args.size()) != info->arity)
      throw ParseError("wrong arity for '" + std::string(name) + "': expected " + std::to_string(info->arity) +
                           ", got " + std::to_string(args.size()),
                       start);
    auto n = std::make_unique<Node>();
    n->kind = Kind::Call;
    n->fn = info->fn;
    n->a = std::move(args[0]);
    if (info->arity == 2) n->b = std::move(args[1]);
    return n;
  }

  std::string_view src_;
  VariableSet allowed_;
  VariableSet used_;
  std::size_t pos_ = 0;
};

double checked_pow(double base, double exponent) {
  if (base < 0.0 && std::trunc(exponent) != exponent) throw EvalError("negative base with non-integer exponent");
  if (base == 0.0 && exponent < 0.0) throw EvalError("zero raised to a negative power");
  return std::pow(base, exponent);
}

double eval_node(const Node& n, const Bindings& b) {
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Var:
      switch (n.var) {
        case Variable::t: return b.t;
        case Variable::r: return b.r;
        case Variable::x: return b.x;
        case Variable::y: return b.y;
      }
      return 0.0;
    case Kind::Neg: return -eval_node(*n.a, b);
    case Kind::Add: return eval_node(*n.a, b) + eval_node(*n.b, b);
    case Kind::Sub: return eval_node(*n.a, b) - eval_node(*n.b, b);
    case Kind::Mul: return eval_node(*n.a, b) * eval_node(*n.b, b);
    case Kind::Div: {
      const double den = eval_node(*n.b, b);
      if (den == 0.0) throw EvalError("division by zero");
      return eval_node(*n.a, b) / den;
    }
    case Kind::Pow: return checked_pow(eval_node(*n.a, b), eval_node(*n.b, b));
    case Kind::Call: {
      const double u = eval_node(*n.a, b);
      switch (n.fn) {
        case Func::Sin: return std::sin(u);
        case Func::Cos: return std::cos(u);
        case Func::Tan: return std::tan(u);
        case Func::Exp: return std::exp(u);
        case Func::Log:
          if (u <= 0.0) throw EvalError("log of a non-positive number");
          return std::log(u);
        case Func::Abs: return std::abs(u);
        case Func::Sqrt:
          if (u < 0.0) throw EvalError("sqrt of a negative number");
          return std::sqrt(u);
        case Func::Tanh: return std::tanh(u);
        case Func::Min: return std::min(u, eval_node(*n.b, b));
        case Func::Max: return std::max(u, eval_node(*n.b, b));
        case Func::PowFn: return checked_pow(u, eval_node(*n.b, b));
      }
    }
  }
  return 0.0;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Node& n, std::ostringstream& os) {
  auto binary = [&](std::string_view op) {
    os << '(';
    print_node(*n.a, os);
    os << ' ' << op << ' ';
    print_node(*n.b, os);
    os << ')';
  };
  switch (n.kind) {
    case Kind::Number: os << format_number(n.value); break;
    case Kind::Var: os << variable_name(n.var); break;
    case Kind::Neg:
      os << "(-";
      print_node(*n.a, os);
      os << ')';
      break;
    case Kind::Add: binary("+"); break;
    case Kind::Sub: binary("-"); break;
    case Kind::Mul: binary("*"); break;
    case Kind::Div: binary("/"); break;
    case Kind::Pow: binary("^"); break;
    case Kind::Call:
      os << function_name(n.fn) << '(';
      print_node(*n.a, os);
      if (n.b) {
        os << ", ";
        print_node(*n.b, os);
      }
      os << ')';
      break;
  }
}

void tree_node(const Node& n, std::ostringstream& os) {
  auto binary = [&](std::string_view name) {
    os << name << '(';
    tree_node(*n.a, os);
    os << ", ";
    tree_node(*n.b, os);
    os << ')';
  };
  switch (n.kind) {
    case Kind::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.15g", n.value);
      os << buf;
      break;
    }
    case Kind::Var: os << variable_name(n.var); break;
    case Kind::Neg:
      os << "Neg(";
      tree_node(*n.a, os);
      os << ')';
      break;
    case Kind::Add: binary("Add"); break;
    case Kind::Sub: binary("Sub"); break;
    case Kind::Mul: binary("Mul"); break;
    case Kind::Div: binary("Div"); break;
    case Kind::Pow: binary("Pow"); break;
    case Kind::Call:
      os << function_name(n.fn) << '(';
      tree_node(*n.a, os);
      if (n.b) {
        os << ", ";
        tree_node(*n.b, os);
      }
      os << ')';
      break;
  }
}

bool equal_nodes(const Node* a, const Node* b) {
  if (a == nullptr || b == nullptr) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::Number: return a->value == b->value;
    case Kind::Var: return a->var == b->var;
    case Kind::Call:
      if (a->fn != b->fn) return false;
      break;
    default: break;
  }
  return equal_nodes(a->a.get(), b->a.get()) && equal_nodes(a->b.get(), b->b.get());
}

}  // namespace

Expr::Expr() : root_(make_number(0.0)), source_("0") {}

Expr::Expr(std::shared_ptr<const Node> root, VariableSet used, std::string source)
    : root_(std::move(root)), used_(used), source_(std::move(source)) {}

double Expr::eval(const Bindings& b) const {
  const double v = eval_node(*root_, b);
  if (!std::isfinite(v)) throw EvalError("non-finite result evaluating '" + source_ + "'");
  return v;
}

double Expr::eval(const std::map<std::string, double>& bindings) const {
  Bindings b;
  auto bind = [&](Variable v, double& slot) {
    if (!used_.contains(v)) return;
    auto it = bindings.find(std::string(variable_name(v)));
    if (it == bindings.end()) throw EvalError("unbound variable '" + std::string(variable_name(v)) + "'");
    slot = it->second;
  };
  bind(Variable::t, b.t);
  bind(Variable::r, b.r);
  bind(Variable::x, b.x);
  bind(Variable::y, b.y);
  return eval(b);
}

std::string Expr::print() const {
  std::ostringstream os;
  print_node(*root_, os);
  return os.str();
}

std::string Expr::tree() const {
  std::ostringstream os;
  tree_node(*root_, os);
  return os.str();
}

bool Expr::structurally_equal(const Expr& other) const { return equal_nodes(root_.get(), other.root_.get()); }

Expr parse(std::string_view source, VariableSet allowed) {
  Parser p(source, allowed);
  NodePtr root = p.parse_all();
  return Expr(std::shared_ptr<const Node>(std::move(root)), p.used(), std::string(source));
}

}  // namespace kirchhoff::expr
