#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "kirchhoff/error.hpp"

namespace kirchhoff::expr {

/// Free variables an expression may reference. The coefficient slot allows
/// {t, r}; the source slot allows {x, y, t}.
enum class Variable : std::uint8_t { t = 0, r = 1, x = 2, y = 3 };

class VariableSet {
 public:
  constexpr VariableSet() = default;
  constexpr VariableSet(std::initializer_list<Variable> vars) {
    for (auto v : vars) bits_ |= bit(v);
  }

  constexpr bool contains(Variable v) const { return (bits_ & bit(v)) != 0; }
  constexpr void insert(Variable v) { bits_ |= bit(v); }
  constexpr bool empty() const { return bits_ == 0; }

  static constexpr VariableSet coefficient() { return {Variable::t, Variable::r}; }
  static constexpr VariableSet source() { return {Variable::x, Variable::y, Variable::t}; }
  static constexpr VariableSet all() { return {Variable::t, Variable::r, Variable::x, Variable::y}; }

 private:
  static constexpr std::uint8_t bit(Variable v) { return std::uint8_t(1u << static_cast<unsigned>(v)); }
  std::uint8_t bits_ = 0;
};

struct Bindings {
  double t = 0.0;
  double r = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Node;

/// Immutable parsed expression. Copies share the tree.
class Expr {
 public:
  Expr();

  /// IEEE double evaluation. Throws EvalError on a domain error or a
  /// non-finite result.
  double eval(const Bindings& b) const;
  double eval(const std::map<std::string, double>& bindings) const;

  /// Infix form that parses back to the same tree.
  std::string print() const;
  /// Constructor-style dump, e.g. "Add(1, Pow(t, 2))".
  std::string tree() const;

  VariableSet variables() const { return used_; }
  bool uses(Variable v) const { return used_.contains(v); }
  const std::string& source() const { return source_; }

  bool structurally_equal(const Expr& other) const;

 private:
  friend Expr parse(std::string_view, VariableSet);
  Expr(std::shared_ptr<const Node> root, VariableSet used, std::string source);

  std::shared_ptr<const Node> root_;
  VariableSet used_;
  std::string source_;
};

/// Recursive-descent parse. Precedence from tightest: `^` (right
/// associative), unary minus, `* /`, `+ -`. Errors carry byte offsets.
Expr parse(std::string_view source, VariableSet allowed = VariableSet::all());

}  // namespace kirchhoff::expr
