#pragma once

// Domain types shared by the solver and verification code: grids, problem
// descriptions, solution fields and verification reports.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fractrans/expr.hpp"

namespace fractrans {

/// Order of a Caputo derivative, 0 < value <= 1.
class FractionalOrder {
 public:
  explicit FractionalOrder(double value);

  double value() const noexcept { return value_; }
  bool is_classical() const noexcept { return value_ == 1.0; }

  auto operator<=>(const FractionalOrder&) const = default;

 private:
  double value_;
};

/// Tensor mesh over [x_min, x_max] x [0, T] with Nx space steps and Nt time
/// steps. Node (i, n) sits at (x_min + i*h, n*tau).
class UniformGrid {
 public:
  UniformGrid(double x_min, double x_max, double T, std::size_t nx, std::size_t nt);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double T() const noexcept { return T_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t nt() const noexcept { return nt_; }
  double h() const noexcept { return (x_max_ - x_min_) / static_cast<double>(nx_); }
  double tau() const noexcept { return T_ / static_cast<double>(nt_); }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * h(); }
  double t(std::size_t n) const noexcept { return static_cast<double>(n) * tau(); }
  std::size_t node_count() const noexcept { return (nx_ + 1) * (nt_ + 1); }

  bool operator==(const UniformGrid&) const = default;

 private:
  double x_min_;
  double x_max_;
  double T_;
  std::size_t nx_;
  std::size_t nt_;
};

/// Malformed input that is not an admissibility question: dimension
/// mismatches, coefficients that fail to evaluate, missing terms.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A real-valued field over (x, t): an expression, a callable, or a table of
/// node values tied to one grid.
class CoefficientField {
 public:
  using Function = std::function<double(double, double)>;

  struct Table {
    std::size_t nx_nodes;
    std::size_t nt_nodes;
    std::vector<double> values;  // values[n * nx_nodes + i]
  };

  CoefficientField();  // the zero field

  static CoefficientField constant(double c);
  static CoefficientField expression(expr::Expression e);
  static CoefficientField expression(const std::string& source);
  static CoefficientField function(Function f, std::string label = "<function>");
  /// Table with nx_nodes * nt_nodes entries laid out time-major.
  static CoefficientField tabulated(std::size_t nx_nodes, std::size_t nt_nodes, std::vector<double> values);

  bool is_tabulated() const noexcept { return std::holds_alternative<Table>(source_); }

  /// Value at node (i, n). Throws StructuralError if a table does not match
  /// the grid or an expression fails to evaluate there.
  double at(const UniformGrid& grid, std::size_t i, std::size_t n) const;

  /// Value at an arbitrary point. Tables cannot be evaluated off-grid.
  double operator()(double x, double t) const;

  void check_dimensions(const UniformGrid& grid) const;

  /// Samples every node into a time-major array.
  std::vector<double> sample(const UniformGrid& grid) const;

  std::string describe() const;

 private:
  struct Function_ {
    Function f;
    std::string label;
  };
  std::variant<double, expr::Expression, Function_, Table> source_;
};

struct Term {
  FractionalOrder order;
  CoefficientField coefficient;
};

/// One initial-boundary-value problem
///   sum_i p_i D_t^{alpha_i} u + sum_j q_j D_x^{beta_j} u = r u + F
/// with u(x, 0) = a(x) and u(x_min, t) = g(t). The initial function is sampled
/// at (x_i, 0) and the boundary function at (x_min, t_n).
struct ProblemSpec {
  std::vector<Term> time_terms;
  std::vector<Term> space_terms;
  CoefficientField reaction;
  CoefficientField forcing;
  CoefficientField initial;
  CoefficientField boundary;
  UniformGrid grid;
};

enum class Condition {
  TimeOrdersIncreasing,
  SpaceOrdersIncreasing,
  TimeCoefficientNonNegative,
  SpaceCoefficientNonNegative,
  TimeCoefficientSumPositive,
  ReactionNonPositive,
  InitialBoundaryCompatible,
};

std::string condition_name(Condition c);

struct Violation {
  Condition condition;
  std::string term;  // e.g. "p_1", "r"; empty for whole-problem conditions
  std::size_t i = 0;
  std::size_t n = 0;
  double x = 0.0;
  double t = 0.0;
  double value = 0.0;
  std::string message;
};

struct ValidationOptions {
  double p_floor = 1e-12;
  double compat_rel_tol = 1e-12;  // scaled by max(1, |g(0)|)
};

/// Every admissibility violation, one per (condition, term), located at the
/// first offending node in time-major order. Throws StructuralError for
/// malformed input (no terms, table dimension mismatch, evaluation failure).
std::vector<Violation> validate_problem(const ProblemSpec& spec, const ValidationOptions& opts = {});

/// Node values u(x_i, t_n), stored time-major.
class SolutionField {
 public:
  explicit SolutionField(UniformGrid grid);
  SolutionField(UniformGrid grid, std::vector<double> values);

  const UniformGrid& grid() const noexcept { return grid_; }
  double operator()(std::size_t i, std::size_t n) const noexcept { return values_[n * (grid_.nx() + 1) + i]; }
  double& operator()(std::size_t i, std::size_t n) noexcept { return values_[n * (grid_.nx() + 1) + i]; }
  std::span<const double> level(std::size_t n) const noexcept {
    return {values_.data() + n * (grid_.nx() + 1), grid_.nx() + 1};
  }
  std::span<double> level(std::size_t n) noexcept { return {values_.data() + n * (grid_.nx() + 1), grid_.nx() + 1}; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const;
  double sup_abs() const;

  bool operator==(const SolutionField&) const = default;

 private:
  UniformGrid grid_;
  std::vector<double> values_;
};

double sup_difference(const SolutionField& a, const SolutionField& b);

/// Which nodes count as the parabolic boundary.
enum class BoundarySet {
  InitialAndInflow,  // row n = 0 and column i = 0
  InitialOnly,       // row n = 0 (Cauchy problems)
};

struct Extrema {
  double max;
  double min;
  std::size_t max_i, max_n;
  std::size_t min_i, min_n;
};

Extrema boundary_extrema(const SolutionField& field, BoundarySet set = BoundarySet::InitialAndInflow);

/// Extrema over the nodes with i_lo <= i <= i_hi, all time levels.
Extrema grid_extrema(const SolutionField& field);
Extrema grid_extrema(const SolutionField& field, std::size_t i_lo, std::size_t i_hi);

enum class Principle {
  MaxPrinciple,
  MinPrinciple,
  BoundaryEquality,
  Uniqueness,
  Comparison,
  CauchySup,
  SemilinearComparison,
  Convergence,
};

std::string principle_name(Principle p);

/// Verdict rule: AtMost passes when measured <= threshold, AtLeast when
/// measured >= threshold.
enum class Direction { AtMost, AtLeast };

struct VerificationReport {
  Principle principle;
  double measured = 0.0;
  double threshold = 0.0;
  Direction direction = Direction::AtMost;
  bool verdict = false;
  std::map<std::string, double> details;
  std::string fingerprint;

  /// Sets verdict from measured, threshold and direction.
  void decide();
};

/// 64-bit FNV-1a over the orders, grid and every sampled coefficient value,
/// as 16 hex digits.
std::string fingerprint(const ProblemSpec& spec);

}  // namespace fractrans
