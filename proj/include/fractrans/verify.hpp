#pragma once

// Numerical certification of the maximum, comparison and uniqueness
// principles on discrete solutions, plus convergence studies and randomized
// admissible problem generation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractrans/core.hpp"
#include "fractrans/solver.hpp"

namespace fractrans::verify {

/// Default rounding allowance; thresholds are this times the field scale.
inline constexpr double kRelTol = 1e-10;

enum class ForcingSign { NonPositive, NonNegative, Zero };

std::string forcing_sign_name(ForcingSign s);

/// A declared hypothesis of a check is contradicted by the sampled data.
class HypothesisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MaxPrincipleOptions {
  ForcingSign forcing = ForcingSign::NonPositive;
  bool reaction_zero = false;
  double rel_tol = kRelTol;
};

/// Checks the extremum bounds of a field against its parabolic boundary
/// (row n = 0 and column i = 0):
///  - F <= 0: max over the grid <= max{0, boundary max}
///  - F >= 0: min over the grid >= min{0, boundary min}
///  - F == 0: both
///  - with r == 0 each inequality becomes an equality with the boundary
///    extremum.
/// `measured` is the largest violation (clamped at zero), `threshold` is
/// rel_tol * max|u|.
VerificationReport check_max_principle(const SolutionField& field, const MaxPrincipleOptions& opts);

/// As above, after confirming the declared forcing sign and r == 0 claim by
/// sampling the problem on its grid. Throws HypothesisError on contradiction.
VerificationReport check_max_principle(const ProblemSpec& spec, const SolutionField& field,
                                       const MaxPrincipleOptions& opts);

/// Solves twice with ascending and descending term assembly order.
VerificationReport check_uniqueness(const ProblemSpec& spec, double tol = 1e-12);

/// Solves the semilinear problem from the default initial iterate and from
/// the boundary-extended field (every level filled with g(t_n)).
/// Default tolerance is 10 * picard.tol.
VerificationReport check_uniqueness(const ProblemSpec& spec, const solver::SemilinearTerm& f,
                                    const solver::PicardOptions& picard, std::optional<double> tol = std::nullopt);

/// Solves two problems and reports their sup difference; passes when the
/// solutions agree within tol. Used to show that distinct boundary data give
/// distinct solutions.
VerificationReport check_uniqueness(const ProblemSpec& a, const ProblemSpec& b, double tol);

enum class ComparisonMode {
  SharedReaction,   // identical r; F1 >= F2, g1 >= g2, a1 >= a2
  OrderedReaction,  // additionally F2, g2, a2 >= 0 and 0 >= r1 >= r2
};

/// Solves both problems and checks u1 - u2 >= -tol everywhere (and u2 >= -tol
/// in the ordered-reaction mode). The hypotheses are sampled first; p and q
/// must agree at every node.
VerificationReport check_comparison(const ProblemSpec& first, const ProblemSpec& second, ComparisonMode mode,
                                    double rel_tol = kRelTol);

/// Solves the truncated Cauchy problem and checks on the interior window:
///  - F <= 0: window max <= sup a + tol, attained on the initial row
///  - F >= 0: the mirrored statement for the infimum.
VerificationReport check_cauchy_sup(const solver::CauchySpec& spec, FractionalOrder alpha, const UniformGrid& grid,
                                    ForcingSign forcing, double rel_tol = kRelTol);

/// Separable scenario u = psi(t) + phi(x) for unit speed. With K = max|phi'|
/// and psi(t) = -K t^a / Gamma(1+a) - c t, the forcing
/// F = D_t^a psi + phi' <= 0 everywhere.
struct SeparableScenario {
  solver::CauchySpec spec;
  double slope_bound;  // K
  double slope_argmax;
  std::function<double(double, double)> exact;
};

/// phi is an expression in x. extra_decay is c >= 0.
SeparableScenario separable_scenario(const std::string& phi, FractionalOrder alpha, double extra_decay,
                                     double x_left, double x_right, double window_left, double window_right);

/// max |phi'| over [lo, hi] from the symbolic derivative: dense sampling then
/// golden-section refinement. Returns {value, argmax}.
std::pair<double, double> max_abs_derivative(const std::string& phi, double lo, double hi);

struct BoundaryData {
  CoefficientField initial;
  CoefficientField boundary;
};

/// Solves the semilinear problem for (f1, data1) and (f2, data2) on the
/// shared coefficients and checks u1 <= u2 + tol. Hypotheses: f1 <= f2 on the
/// common declared range, both admissible, a1 <= a2 and g1 <= g2 at nodes.
VerificationReport check_semilinear_comparison(const solver::SemilinearTerm& f1, const solver::SemilinearTerm& f2,
                                               const BoundaryData& data1, const BoundaryData& data2,
                                               const ProblemSpec& shared, const solver::PicardOptions& picard,
                                               double tol = 1e-8);

enum class ErrorNorm {
  SupGrid,        // every node
  SupFinalLevel,  // nodes at t = T
  SupLastColumn,  // nodes at x = x_max
};

struct GridLadder {
  double x_min = 0.0;
  double x_max = 1.0;
  double T = 1.0;
  std::vector<std::pair<std::size_t, std::size_t>> levels;  // (Nx, Nt)
  std::function<ProblemSpec(const UniformGrid&)> build;
  ErrorNorm norm = ErrorNorm::SupGrid;
};

struct ConvergenceRow {
  std::size_t level;
  std::size_t nx;
  std::size_t nt;
  double sup_error;
  double observed_order;  // NaN on the first level
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool monotone = true;  // errors non-increasing along the ladder
};

/// Throws std::invalid_argument unless each level refines the previous one:
/// both counts increase, or one increases with the other fixed.
void validate_ladder(const GridLadder& ladder);

ConvergenceTable convergence_study(const GridLadder& ladder, const std::function<double(double, double)>& exact);

/// Report passing when the last observed order lies in [lo, hi].
VerificationReport convergence_report(const ConvergenceTable& table, double lo, double hi);

/// u*(x, t) = sum_k time_coeffs[k] t^k + sum_k space_coeffs[k] (x - x_min)^k.
struct PolynomialSolution {
  std::vector<double> time_coeffs;
  std::vector<double> space_coeffs;

  double operator()(double x, double t, double x_min) const;
};

/// Problem whose exact solution is the polynomial: forcing assembled from the
/// closed-form Caputo derivatives of monomials, data from u*.
ProblemSpec manufactured_problem(const std::vector<Term>& time_terms, const std::vector<Term>& space_terms,
                                 const CoefficientField& reaction, const PolynomialSolution& solution,
                                 const UniformGrid& grid);

struct RandomSpecOptions {
  std::size_t nx = 64;
  std::size_t nt = 64;
  std::size_t max_terms = 3;
  ForcingSign forcing = ForcingSign::NonPositive;
  bool reaction_zero = false;
  bool nonnegative_data = false;  // a >= 0 and g >= 0
};

/// Admissible problem with smooth trigonometric coefficients of controlled
/// sign. Identical seeds give identical problems.
ProblemSpec random_admissible_spec(std::uint64_t seed, const RandomSpecOptions& opts);

/// Per-index seed derivation used by the fuzzers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct FuzzOptions {
  std::size_t count = 200;
  std::uint64_t seed = 42;
  RandomSpecOptions spec{};
  double rel_tol = kRelTol;
};

/// Generates `count` problems, solves each, runs check_max_principle.
std::vector<VerificationReport> fuzz_max_principle(const FuzzOptions& opts);

struct ProblemPair {
  ProblemSpec first;
  ProblemSpec second;
};

/// One ordered pair as used by fuzz_comparison: `first` dominates `second`
/// in the sense of `mode`.
ProblemPair random_ordered_pair(std::uint64_t seed, const RandomSpecOptions& opts, ComparisonMode mode);

/// Ordered pairs (F1 = F2 + nonneg bump, a1 = a2 + nonneg, g1 = g2 + nonneg;
/// and r1 >= r2 in the ordered mode) checked with check_comparison.
std::vector<VerificationReport> fuzz_comparison(const FuzzOptions& opts, ComparisonMode mode);

}  // namespace fractrans::verify
