#pragma once

// L1 discretization of the Caputo derivative on a uniform step, shared by the
// time and space operators, plus a quadrature reference used by the tests.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fractrans/core.hpp"

namespace fractrans::fracops {

/// Convolution weights b_k = ((k+1)^{1-a} - k^{1-a}) / Gamma(2-a) for
/// k = 0..K-1 and scale step^{-a}. For order 1 the table is empty and the
/// operator is the backward difference.
class L1Weights {
 public:
  FractionalOrder order() const noexcept { return order_; }
  double step() const noexcept { return step_; }
  double scale() const noexcept { return scale_; }
  bool backward_difference() const noexcept { return order_.is_classical(); }

  /// Number of history terms available (K). Unbounded in backward-difference
  /// mode.
  std::size_t size() const noexcept;

  /// b_k; in backward-difference mode b_0 = 1 and b_k = 0 for k > 0.
  double operator[](std::size_t k) const noexcept;

  std::span<const double> weights() const noexcept { return weights_; }

 private:
  friend L1Weights build_weights(FractionalOrder, double, std::size_t);
  L1Weights(FractionalOrder order, double step) : order_(order), step_(step) {}

  FractionalOrder order_;
  double step_;
  double scale_ = 1.0;
  std::vector<double> weights_;
};

L1Weights build_weights(FractionalOrder order, double step, std::size_t K);

/// step^{-a} * sum_{k=0}^{n-1} b_k (f_{n-k} - f_{n-k-1}); (f_n - f_{n-1})/step
/// for order 1.
double caputo_l1_at(std::span<const double> samples, const L1Weights& weights, std::size_t n);

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}
  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

using RealFunction = std::function<double(double)>;

/// Caputo derivative of order 0 < order < 1 at t by tanh-sinh quadrature of
///   1/Gamma(1-a) * int_0^t (t-s)^{-a} f'(s) ds
/// with f' supplied analytically. f' may be integrably singular at s = 0.
double caputo_quad_oracle(const RealFunction& derivative, FractionalOrder order, double t, double tol);

/// As above with f' from a fourth-order central difference of f; f must be
/// smooth on a small neighborhood of [0, t].
double caputo_quad_oracle_fd(const RealFunction& f, FractionalOrder order, double t, double tol);

/// Closed-form Caputo derivative of t^k (k >= 0 integer):
/// Gamma(k+1)/Gamma(k+1-a) t^{k-a}, zero for k = 0.
double caputo_monomial(unsigned k, double order, double t);

}  // namespace fractrans::fracops
