#pragma once

// Implicit L1 time-marching solvers for the multi-term transport equation,
// its semilinear variant, the truncated Cauchy problem and the multi-term
// fractional ODE.

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractrans/core.hpp"
#include "fractrans/expr.hpp"

namespace fractrans::solver {

/// Order in which the time and space terms are accumulated into each row.
enum class AssemblyOrder { Ascending, Descending };

struct SolveOptions {
  AssemblyOrder assembly = AssemblyOrder::Ascending;
  ValidationOptions validation{};
  /// Checks the sign pattern of every assembled row (positive diagonal,
  /// non-negative neighbour weights).
#ifdef NDEBUG
  bool check_m_matrix = false;
#else
  bool check_m_matrix = true;
#endif
};

class InadmissibleProblem : public std::runtime_error {
 public:
  explicit InadmissibleProblem(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// An assembled row lost the sign structure that admissible problems
/// guarantee.
class InvariantBreach : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Solves sum_i p_i D_t^{a_i} u + sum_j q_j D_x^{b_j} u = r u + F with L1 in
/// time and in space (Caputo from x_min). Each time level is a lower
/// triangular system solved by one forward sweep over i.
SolutionField solve_ibvp(const ProblemSpec& spec, const SolveOptions& opts = {});

/// Semilinear source f(u) with df/du <= 0 on a declared range.
class SemilinearTerm {
 public:
  using Function = std::function<double(double)>;

  /// Expression in the single variable u. The derivative is taken
  /// symbolically.
  static SemilinearTerm expression(const std::string& source, double u_lo, double u_hi);
  static SemilinearTerm function(Function f, Function df, double u_lo, double u_hi, std::string label);

  double operator()(double u) const { return f_(u); }
  double derivative(double u) const { return df_(u); }
  double u_lo() const noexcept { return u_lo_; }
  double u_hi() const noexcept { return u_hi_; }
  const std::string& label() const noexcept { return label_; }

 private:
  SemilinearTerm(Function f, Function df, double lo, double hi, std::string label);

  Function f_;
  Function df_;
  double u_lo_;
  double u_hi_;
  std::string label_;
};

class NotAdmissibleTerm : public std::invalid_argument {
 public:
  NotAdmissibleTerm(const std::string& what, double where, double slope)
      : std::invalid_argument(what), where_(where), slope_(slope) {}
  double where() const noexcept { return where_; }
  double slope() const noexcept { return slope_; }

 private:
  double where_;
  double slope_;
};

/// Samples df/du at `samples` evenly spaced points of the declared range and
/// throws NotAdmissibleTerm at the first positive slope.
void validate_semilinear(const SemilinearTerm& f, std::size_t samples = 1000);

struct PicardOptions {
  double tol = 1e-9;
  std::size_t max_iter = 500;
  double damping = 1.0;
  /// First iterate at each level is taken from this field's level; by default
  /// the previous level is used.
  std::optional<SolutionField> initial_iterate;
  SolveOptions solve{};
};

struct SemilinearResult {
  SolutionField field;
  std::vector<std::size_t> iterations;  // per time level 1..Nt
};

class PicardDivergence : public std::runtime_error {
 public:
  PicardDivergence(const std::string& what, std::size_t level, std::vector<double> residuals)
      : std::runtime_error(what), level_(level), residuals_(std::move(residuals)) {}
  std::size_t level() const noexcept { return level_; }
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::size_t level_;
  std::vector<double> residuals_;
};

/// Solves the equation with source F + f(u) by Picard iteration at every
/// time level, each iterate being one linear sweep with f frozen.
SemilinearResult solve_semilinear(const ProblemSpec& spec, const SemilinearTerm& f, const PicardOptions& opts = {});

/// D_t^a u + q(x) u_x = F on a truncated line.
struct CauchySpec {
  CoefficientField speed;  // q(x) > 0
  CoefficientField initial;
  CoefficientField forcing;
  double x_left;
  double x_right;
  double window_left;
  double window_right;
  /// Minimum distance between window and truncation edge, as a fraction of
  /// x_right - x_left.
  double margin_fraction = 0.25;
  /// User declaration that int_{-inf}^0 1/q diverges; cannot be checked from
  /// samples.
  bool inverse_speed_diverges = true;
};

/// Throws std::invalid_argument if the window or margins are inconsistent.
void validate_cauchy(const CauchySpec& spec);

/// Column range [lo, hi] of the interior window on `grid`.
std::pair<std::size_t, std::size_t> window_columns(const CauchySpec& spec, const UniformGrid& grid);

/// The truncated problem as an initial-boundary-value problem: one time
/// term of order alpha, one classical upwind space term with coefficient q,
/// no reaction, inflow value frozen at a(x_left).
ProblemSpec cauchy_problem(const CauchySpec& spec, FractionalOrder alpha, const UniformGrid& grid);

SolutionField solve_cauchy_truncated(const CauchySpec& spec, FractionalOrder alpha, const UniformGrid& grid,
                                     const SolveOptions& opts = {});

struct InverseSpeedGrowth {
  double far_half;   // int over [x_left, x_left/2] of 1/q
  double near_half;  // int over [x_left/2, 0] of 1/q
  bool warning;      // far half contributes less than a quarter of the near half
};

/// Finite-sample heuristic for the divergence of int_{-inf}^0 1/q. Warning
/// only.
InverseSpeedGrowth inverse_speed_growth(const CauchySpec& spec, std::size_t samples = 2048);

/// L1 solution of D^{a_n} u + sum_{i<n} p_i(t) D^{a_i} u = rhs(t), u(0) = u0
/// on Nt uniform steps of [0, T]. `coeffs` holds p_1..p_{n-1}.
std::vector<double> solve_multiterm_fode(const std::vector<FractionalOrder>& orders,
                                         const std::vector<std::function<double(double)>>& coeffs,
                                         const std::function<double(double)>& rhs, double u0, std::size_t Nt,
                                         double T);

}  // namespace fractrans::solver
