#include "fractrans/fracops.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fractrans::fracops {

std::size_t L1Weights::size() const noexcept {
  return backward_difference() ? std::numeric_limits<std::size_t>::max() : weights_.size();
}

double L1Weights::operator[](std::size_t k) const noexcept {
  if (backward_difference()) return k == 0 ? 1.0 : 0.0;
  return weights_[k];
}

L1Weights build_weights(FractionalOrder order, double step, std::size_t K) {
  if (!(step > 0.0)) throw std::invalid_argument("build_weights: step must be positive");
  if (K == 0) throw std::invalid_argument("build_weights: need at least one weight");
  L1Weights w(order, step);
  const double a = order.value();
  if (order.is_classical()) {
    w.scale_ = 1.0 / step;
    return w;
  }
  const double gamma = 1.0 - a;
  const double inv_gamma_fn = std::exp(-std::lgamma(2.0 - a));
  w.scale_ = std::pow(step, -a);
  w.weights_.resize(K);
  w.weights_[0] = inv_gamma_fn;
  for (std::size_t k = 1; k < K; ++k) {
    // (k+1)^g - k^g = k^g * expm1(g * log1p(1/k)), free of cancellation for large k
    const double kd = static_cast<double>(k);
    w.weights_[k] = std::pow(kd, gamma) * std::expm1(gamma * std::log1p(1.0 / kd)) * inv_gamma_fn;
  }
  return w;
}

double caputo_l1_at(std::span<const double> f, const L1Weights& w, std::size_t n) {
  if (n < 1 || n >= f.size()) throw std::out_of_range("caputo_l1_at: index out of range");
  if (w.backward_difference()) return (f[n] - f[n - 1]) / w.step();
  if (n > w.size()) throw std::out_of_range("caputo_l1_at: weight table shorter than requested history");
  const auto b = w.weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += b[k] * (f[n - k] - f[n - k - 1]);
  return acc * w.scale();
}

double caputo_quad_oracle(const RealFunction& derivative, FractionalOrder order, double t, double tol) {
  const double a = order.value();
  if (order.is_classical()) throw std::invalid_argument("caputo_quad_oracle: order must be below 1");
  if (!(t > 0.0)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  const double half = 0.5 * t;
  const double g = 1.0 - a;
  // [0, t/2] directly; f' may be singular at 0.
  double err1 = 0.0;
  double l1a = 0.0;
  const double near_origin = integrator.integrate(
      [&](double s) { return std::pow(t - s, -a) * derivative(s); }, 0.0, half, tol, &err1, &l1a);
  // [t/2, t] with w = (t - s)^{1-a}, which removes the kernel singularity.
  double err2 = 0.0;
  double l1b = 0.0;
  const double near_end = integrator.integrate(
      [&](double w) { return derivative(t - std::pow(w, 1.0 / g)); }, 0.0, std::pow(half, g), tol, &err2, &l1b);
  const double value = near_origin + near_end / g;
  const double error = err1 + err2 / g;
  const double l1 = l1a + l1b / g;
  if (!std::isfinite(value) || error > std::max(10.0 * tol * l1, 1e-300)) {
    throw QuadratureError("caputo_quad_oracle: quadrature did not reach tolerance", value, error);
  }
  return value * std::exp(-std::lgamma(1.0 - a));
}

double caputo_quad_oracle_fd(const RealFunction& f, FractionalOrder order, double t, double tol) {
  auto derivative = [&f](double s) {
    const double h = 7e-4 * std::max(1.0, std::abs(s));
    return (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12 * h);
  };
  return caputo_quad_oracle(derivative, order, t, tol);
}

double caputo_monomial(unsigned k, double order, double t) {
  if (k == 0) return 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(std::lgamma(kd + 1.0) - std::lgamma(kd + 1.0 - order)) * std::pow(t, kd - order);
}

}  // namespace fractrans::fracops
