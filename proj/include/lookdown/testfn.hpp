#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lookdown/evolution.hpp"
#include "lookdown/matrix.hpp"

namespace lookdown {

// Smooth univariate pieces with analytic derivatives: a compactly supported
// bump, or a bounded decaying exponential.
struct FactorShape {
  enum Kind { bump, exp_decay } kind = bump;
  double center = 0.0;  // bump center
  double width = 1.0;   // bump half-width
  double rate = 1.0;    // decay rate

  double value(double x) const {
    if (kind == exp_decay) return std::exp(-rate * x);
    double y = (x - center) / width;
    if (std::abs(y) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - y * y));
  }

  double deriv(double x) const {
    if (kind == exp_decay) return -rate * std::exp(-rate * x);
    double y = (x - center) / width;
    if (std::abs(y) >= 1.0) return 0.0;
    double f = std::exp(1.0 - 1.0 / (1.0 - y * y));
    double g = -2.0 * y / ((1.0 - y * y) * (1.0 - y * y));
    return f * g / width;
  }
};

// Coordinate binding: one unordered matrix entry or one mark.
struct FactorBinding {
  bool is_mark = false;
  int i = 0;
  int j = 0;  // unused for marks
};

struct Factor {
  FactorBinding binding;
  FactorShape shape;
};

// Product test function phi = prod_k f_k(coordinate_k) on restricted plain
// or marked matrices. Partial derivatives are taken per bound coordinate; an
// unordered entry counts once.
class TestFunction {
 public:
  TestFunction(int arity, bool marked, std::vector<Factor> factors)
      : arity_(arity), marked_(marked), factors_(std::move(factors)) {
    for (const auto& f : factors_) {
      if (f.binding.is_mark) {
        if (!marked_) throw std::invalid_argument("test function: mark factor on plain type");
        if (f.binding.i < 1 || f.binding.i > arity_)
          throw std::invalid_argument("test function: mark index out of range");
      } else {
        if (f.binding.i < 1 || f.binding.j <= f.binding.i || f.binding.j > arity_)
          throw std::invalid_argument("test function: entry binding must satisfy i < j <= arity");
      }
    }
  }

  static TestFunction plain_entry(int arity, int i, int j, FactorShape shape) {
    return TestFunction(arity, false, {Factor{FactorBinding{false, i, j}, shape}});
  }

  static TestFunction marked_entry(int arity, int i, int j, FactorShape shape) {
    return TestFunction(arity, true, {Factor{FactorBinding{false, i, j}, shape}});
  }

  static TestFunction mark(int arity, int i, FactorShape shape) {
    return TestFunction(arity, true, {Factor{FactorBinding{true, i, 0}, shape}});
  }

  int arity() const { return arity_; }
  bool marked() const { return marked_; }
  const std::vector<Factor>& factors() const { return factors_; }

  double value_plain(const Matrix& rho) const {
    check_plain(rho);
    double v = 1.0;
    for (const auto& f : factors_) v *= f.shape.value(rho.at(f.binding.i, f.binding.j));
    return v;
  }

  double value_marked(const MarkedMatrix& rm) const {
    check_marked(rm);
    double v = 1.0;
    for (const auto& f : factors_) v *= f.shape.value(coord(rm, f.binding));
    return v;
  }

  // Sum over bound unordered entries of the partial derivative (product rule
  // within repeated bindings handled factor by factor).
  double entry_gradient_sum(const Matrix& rho) const {
    check_plain(rho);
    return gradient_sum(
        [&](const FactorBinding& b) { return rho.at(b.i, b.j); },
        [](const FactorBinding& b) { return !b.is_mark; });
  }

  double entry_gradient_sum_marked(const MarkedMatrix& rm) const {
    check_marked(rm);
    return gradient_sum([&](const FactorBinding& b) { return coord(rm, b); },
                        [](const FactorBinding& b) { return !b.is_mark; });
  }

  double mark_gradient_sum(const MarkedMatrix& rm) const {
    check_marked(rm);
    return gradient_sum([&](const FactorBinding& b) { return coord(rm, b); },
                        [](const FactorBinding& b) { return b.is_mark; });
  }

 private:
  static double coord(const MarkedMatrix& rm, const FactorBinding& b) {
    return b.is_mark ? rm.u[b.i - 1] : rm.r.at(b.i, b.j);
  }

  void check_plain(const Matrix& rho) const {
    if (marked_) throw std::invalid_argument("test function: marked type applied to plain state");
    if (rho.n() < arity_) throw std::invalid_argument("test function: arity exceeds matrix size");
  }

  void check_marked(const MarkedMatrix& rm) const {
    if (!marked_) throw std::invalid_argument("test function: plain type applied to marked state");
    if (rm.r.n() < arity_) throw std::invalid_argument("test function: arity exceeds matrix size");
  }

  template <class Coord, class Select>
  double gradient_sum(Coord coord_of, Select select) const {
    double total = 0.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (!select(factors_[k].binding)) continue;
      double term = factors_[k].shape.deriv(coord_of(factors_[k].binding));
      for (std::size_t l = 0; l < factors_.size(); ++l)
        if (l != k) term *= factors_[l].shape.value(coord_of(factors_[l].binding));
      total += term;
    }
    return total;
  }

  int arity_ = 0;
  bool marked_ = false;
  std::vector<Factor> factors_;
};

}  // namespace lookdown
