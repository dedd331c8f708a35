#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ceal {

/// A small arithmetic/boolean expression over named parameters, used for
/// custom feasibility constraints such as
///
///   ceil(sim_procs / sim_ppn) + ceil(ana_procs / ana_ppn) <= 32
///
/// Supported: numbers, identifiers, + - * / %, unary - and !, comparisons
/// (< <= > >= == !=), && and ||, parentheses, and the functions
/// min, max, ceil, floor, abs, log2. Booleans evaluate to 1.0 / 0.0.
class Expression {
 public:
  /// Parses `text`; identifiers are resolved against `names` (their index
  /// becomes the slot read at evaluation time). Throws ConfigError on
  /// syntax errors or unknown identifiers.
  static Expression parse(std::string_view text, std::span<const std::string> names);

  double evaluate(std::span<const double> values) const;
  bool holds(std::span<const double> values) const { return evaluate(values) != 0.0; }

  const std::string& text() const { return text_; }
  /// Indices of the identifiers the expression reads, ascending, unique.
  const std::vector<std::size_t>& operands() const { return operands_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  std::vector<std::size_t> operands_;
};

/// Identifier names appearing in `text`, in order of first appearance.
std::vector<std::string> expression_identifiers(std::string_view text);

}  // namespace ceal
