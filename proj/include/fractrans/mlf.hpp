#pragma once

// Two-parameter Mittag-Leffler function for real arguments, and the
// separable solutions built from it that serve as exact references.

#include <cstddef>
#include <stdexcept>

namespace fractrans::mlf {

/// Tuning constants for mittag_leffler.
struct Config {
  /// The power series is summed while |z|^{1/alpha} <= series_switch; beyond
  /// that, negative arguments go through the integral representation.
  static constexpr double series_switch = 5.0;
  static constexpr std::size_t term_cap = 400;
  static constexpr double series_rel_tol = 1e-17;
  static constexpr double integral_rel_tol = 1e-14;
};

class RangeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta) for real z.
///
/// Supported: alpha > 0, beta > 0, with
///  - z >= 0 whenever the series converges within Config::term_cap terms and
///    the value is finite,
///  - z < 0 with |z|^{1/alpha} <= Config::series_switch (series),
///  - z < 0 beyond that for 0 < alpha < 1 and 0 < beta < 1 + alpha (integral
///    representation), and for alpha = beta = 1 (exp).
/// This covers |z| <= 50 for alpha in [0.2, 1], beta in {1, alpha} on the
/// negative axis. Anything else throws RangeError.
double mittag_leffler(double alpha, double beta, double z);

inline double mittag_leffler(double alpha, double z) { return mittag_leffler(alpha, 1.0, z); }

/// a0 * E_alpha(r t^alpha): solves D_t^alpha u = r u, u(0) = a0.
double ml_time_solution(double alpha, double r, double a0, double t);

/// g0 * E_beta(lambda x^beta): solves D_x^beta u = lambda u, u(0) = g0.
double ml_space_solution(double beta, double lambda, double g0, double x);

}  // namespace fractrans::mlf
